//! Comparison models. They reuse the trainer and evaluator unchanged; only
//! the [`Variant`] in the model configuration differs.

use crate::error::Result;
use crate::model::{ModelConfig, Variant};

/// Per-domain matrix factorisation trained with the same BPR machinery:
/// one user table per domain, score `e_u^d · e_i^d`, no graph.
pub fn mf_bpr(base: &ModelConfig) -> ModelConfig {
    ModelConfig {
        variant: Variant::Mf,
        tie_relation_weights: false,
        ..base.clone()
    }
}

/// `mode` is one of `full`, `specific_only` (per-relation propagation
/// without the shared path, the RGCN-style baseline) or `shared_only`.
pub fn ablation(base: &ModelConfig, mode: &str) -> Result<ModelConfig> {
    let variant: Variant = mode.parse()?;
    if variant == Variant::Mf {
        return Ok(mf_bpr(base));
    }
    let config = ModelConfig {
        variant,
        ..base.clone()
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn modes() {
        let base = ModelConfig::new(3, vec![2, 2]);
        assert_eq!(ablation(&base, "full").unwrap(), base);
        assert_eq!(ablation(&base, "specific_only").unwrap().variant, Variant::SpecificOnly);
        assert_eq!(ablation(&base, "shared_only").unwrap().variant, Variant::SharedOnly);
        assert_eq!(mf_bpr(&base).variant, Variant::Mf);
        assert!(ablation(&base, "gat").is_err());
    }
}
