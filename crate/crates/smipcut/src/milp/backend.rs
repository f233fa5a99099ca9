use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::simplex::{self, Basis};
use super::{LpModel, LpSolution};

/// An LP engine. External engines implement this and are registered under
/// a name, then selected with `SMIPCUT_SOLVER=external:<name>`.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn solve_lp(&self, model: &LpModel, basis: Option<&Basis>) -> LpSolution;
}

pub struct BuiltinBackend;

impl Backend for BuiltinBackend {
    fn name(&self) -> &str {
        "builtin"
    }

    fn solve_lp(&self, model: &LpModel, basis: Option<&Basis>) -> LpSolution {
        simplex::solve(model, basis)
    }
}

type Registry = RwLock<HashMap<String, Arc<dyn Backend>>>;

fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Make an external backend selectable by name.
pub fn register_backend(name: &str, backend: Arc<dyn Backend>) {
    registry()
        .write()
        .expect("backend registry poisoned")
        .insert(name.to_string(), backend);
}

/// Resolve `SMIPCUT_SOLVER` (unset means builtin).
pub fn backend_from_env() -> Result<Arc<dyn Backend>, String> {
    match std::env::var("SMIPCUT_SOLVER") {
        Err(_) => Ok(Arc::new(BuiltinBackend)),
        Ok(v) => parse_backend(&v),
    }
}

fn parse_backend(spec: &str) -> Result<Arc<dyn Backend>, String> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "builtin" {
        return Ok(Arc::new(BuiltinBackend));
    }
    if let Some(name) = spec.strip_prefix("external:") {
        return registry()
            .read()
            .expect("backend registry poisoned")
            .get(name)
            .cloned()
            .ok_or_else(|| format!("no external solver backend registered as '{name}'"));
    }
    Err(format!("SMIPCUT_SOLVER must be 'builtin' or 'external:<name>', got '{spec}'"))
}

pub(crate) fn current() -> Arc<dyn Backend> {
    match backend_from_env() {
        Ok(b) => b,
        Err(msg) => {
            static WARNED: OnceLock<()> = OnceLock::new();
            WARNED.get_or_init(|| log::warn!("{msg}; falling back to builtin"));
            Arc::new(BuiltinBackend)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_builtin_and_rejects_unknown() {
        assert_eq!(parse_backend("builtin").unwrap().name(), "builtin");
        assert!(parse_backend("external:nope").is_err());
        assert!(parse_backend("cplex").is_err());
    }

    #[test]
    fn registered_backend_resolves() {
        register_backend("echo", Arc::new(BuiltinBackend));
        assert_eq!(parse_backend("external:echo").unwrap().name(), "builtin");
    }
}
