use super::model::ModelVector;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Wire size of messages that carry no model.
pub const STUB_BYTES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Register,
    GlobalModel,
    GlobalModelRecv,
    TrainRequest,
    LocalModel,
    LocalModelRecv,
    StatusQuery,
    StatusReply,
}

impl MessageKind {
    pub fn carries_model(self) -> bool {
        matches!(self, MessageKind::GlobalModel | MessageKind::LocalModel)
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MessageKind::Register => "REGISTER",
            MessageKind::GlobalModel => "GLOBAL_MODEL",
            MessageKind::GlobalModelRecv => "GLOBAL_MODEL_RECV",
            MessageKind::TrainRequest => "TRAIN_REQUEST",
            MessageKind::LocalModel => "LOCAL_MODEL",
            MessageKind::LocalModelRecv => "LOCAL_MODEL_RECV",
            MessageKind::StatusQuery => "STATUS_QUERY",
            MessageKind::StatusReply => "STATUS_REPLY",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommMessage {
    pub kind: MessageKind,
    pub round: u32,
    pub model: Option<ModelVector>,
    /// (local epochs, batch size) for training requests
    pub train: Option<(u32, usize)>,
}

impl CommMessage {
    pub fn stub(kind: MessageKind, round: u32) -> CommMessage {
        debug_assert!(!kind.carries_model());
        CommMessage {
            kind,
            round,
            model: None,
            train: None,
        }
    }

    pub fn with_model(kind: MessageKind, round: u32, model: ModelVector) -> CommMessage {
        debug_assert!(kind.carries_model());
        CommMessage {
            kind,
            round,
            model: Some(model),
            train: None,
        }
    }

    pub fn train_request(round: u32, epochs: u32, batch: usize) -> CommMessage {
        CommMessage {
            kind: MessageKind::TrainRequest,
            round,
            model: None,
            train: Some((epochs, batch)),
        }
    }

    pub fn payload_bytes(&self) -> u64 {
        match &self.model {
            Some(m) => m.serialized_bytes(),
            None => STUB_BYTES,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_kind() {
        let m = ModelVector::zeros(100);
        assert_eq!(CommMessage::with_model(MessageKind::LocalModel, 2, m.clone()).payload_bytes(), m.serialized_bytes());
        assert_eq!(CommMessage::stub(MessageKind::LocalModelRecv, 2).payload_bytes(), STUB_BYTES);
        assert_eq!(CommMessage::train_request(2, 5, 100).payload_bytes(), STUB_BYTES);
    }
}
