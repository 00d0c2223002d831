use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use tailoredsec_core::session::{SessionError, SessionState};
use tailoredsec_core::store::StoreError;

/// Machine-readable error codes returned in the `code` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    AllocationExhausted,
    NotFound,
    IllegalEvent,
    MalformedPayload,
    Unauthorized,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::AllocationExhausted | ErrorCode::IllegalEvent => StatusCode::CONFLICT,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::MalformedPayload => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            state: None,
        }
    }

    pub fn with_state(mut self, state: SessionState) -> Self {
        self.state = Some(state.name().to_string());
        self
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("unknown session {what}"))
    }

    /// Maps a session-machine error. `state` is the session's state when the
    /// event was rejected.
    pub fn from_session(err: SessionError, state: Option<SessionState>) -> Self {
        let code = match &err {
            SessionError::IllegalEvent { .. } | SessionError::GateNotSatisfied { .. } | SessionError::WrongState(_) => {
                ErrorCode::IllegalEvent
            }
            SessionError::UnknownAsset { .. } | SessionError::Assessment(_) | SessionError::Bfi10(_) => {
                ErrorCode::MalformedPayload
            }
            SessionError::AllocationExhausted => ErrorCode::AllocationExhausted,
        };
        let e = Self::new(code, err.to_string());
        match state {
            Some(s) => e.with_state(s),
            None => e,
        }
    }

    pub fn from_store(err: StoreError, state: Option<SessionState>) -> Self {
        match err {
            StoreError::Session(e) => Self::from_session(e, state),
            StoreError::UnknownSession(id) => Self::not_found(id),
            other => {
                tracing::error!(error = %other, "store failure");
                Self::new(ErrorCode::Internal, "internal storage error")
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.code.status();
        if self.code == ErrorCode::Unauthorized {
            return status.into_response();
        }
        (status, Json(self)).into_response()
    }
}
