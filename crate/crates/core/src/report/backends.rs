use super::config::{ClassifierSpec, ModelSpec, RemoteSpec, ToxicitySpec};
use super::ReportError;
use crate::regard::{OtherPolicy, RegardClassifier, RemoteRegardClassifier, RemoteToxicityScorer, ToxicityScorer};
use crate::scoring::remote::{ProcessTransport, RemoteClient, RetryPolicy, TcpTransport, Transport};
use crate::scoring::stub::{FixedTableModel, UniformModel};
use crate::scoring::{LanguageBackend, LocalEngine};
use std::sync::Arc;
use std::time::Duration;

fn remote_client(spec: &RemoteSpec) -> Result<RemoteClient, ReportError> {
    let endpoint = spec
        .endpoint_env
        .as_ref()
        .and_then(|v| std::env::var(v).ok())
        .or_else(|| spec.endpoint.clone());
    let transport: Arc<dyn Transport> = match (endpoint, &spec.command) {
        (Some(addr), _) => Arc::new(TcpTransport::new(addr, Duration::from_secs(spec.timeout_secs))),
        (None, Some(cmd)) => Arc::new(ProcessTransport::new(cmd.clone()).map_err(|e| {
            ReportError::Backend(format!("{}: cannot start {:?}: {e}", spec.model_id, cmd))
        })?),
        (None, None) => {
            return Err(ReportError::Backend(format!(
                "{}: no endpoint or command configured",
                spec.model_id
            )))
        }
    };
    Ok(RemoteClient::new(spec.model_id.clone(), transport)
        .with_batch_size(spec.batch_size)
        .with_context_limit(spec.context_limit)
        .with_retry(RetryPolicy {
            max_attempts: spec.max_attempts,
            ..RetryPolicy::default()
        }))
}

pub fn build_backend(spec: &ModelSpec) -> Result<Arc<dyn LanguageBackend>, ReportError> {
    Ok(match spec {
        ModelSpec::Uniform { model_id, context_limit } => {
            Arc::new(LocalEngine::new(model_id.clone(), UniformModel, *context_limit))
        }
        ModelSpec::FixedTable { model_id, seed, context_limit } => Arc::new(LocalEngine::new(
            model_id.clone(),
            FixedTableModel::from_seed(*seed),
            *context_limit,
        )),
        ModelSpec::Scripted(s) => Arc::new(s.clone()),
        ModelSpec::FixedText(s) => Arc::new(s.clone()),
        ModelSpec::ScriptedText(s) => Arc::new(s.clone()),
        ModelSpec::Remote(r) => Arc::new(remote_client(r)?),
    })
}

pub fn build_classifier(
    spec: &ClassifierSpec,
    other: OtherPolicy,
) -> Result<Arc<dyn RegardClassifier>, ReportError> {
    Ok(match spec {
        ClassifierSpec::Keyword(k) => Arc::new(k.clone()),
        ClassifierSpec::Remote(r) => Arc::new(RemoteRegardClassifier {
            id: r.model_id.clone(),
            client: remote_client(r)?,
            other,
        }),
    })
}

pub fn build_toxicity(spec: &ToxicitySpec) -> Result<Arc<dyn ToxicityScorer>, ReportError> {
    Ok(match spec {
        ToxicitySpec::Keyword(k) => Arc::new(k.clone()),
        ToxicitySpec::Remote(r) => Arc::new(RemoteToxicityScorer {
            id: r.model_id.clone(),
            client: remote_client(r)?,
        }),
    })
}
