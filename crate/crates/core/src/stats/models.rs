//! Named regression specifications shipped with the tool.

use crate::error::{Error, Result};
use crate::stats::design::{Block, DesignSpec};

fn spec(name: &str, outcome: &str, blocks: Vec<Block>) -> DesignSpec {
    DesignSpec::new(name, outcome, blocks)
}

/// Every built-in spec, in a stable order.
pub fn builtin_specs() -> Vec<DesignSpec> {
    use Block::*;
    let full = || vec![IatRev, IatScore, WIndices, XSocio, LexicalDensity];
    let mut v = vec![
        spec("table2_col1", "sit", vec![IatRev]),
        spec("table2_col2", "sit", vec![IatRev, XSocio]),
        spec("table2_col3", "sit", vec![IatRev, IatScore, XSocio]),
        spec("table2_col4", "sit", vec![IatRev, IatScore, WIndices]),
        spec("table2_col5", "sit", vec![IatRev, IatScore, WIndices, XSocio]),
        spec("table2_col6", "sit", full()),
        spec("table3_col1", "sit", vec![IatScore, WIndices, LexicalDensity, XSocio]),
        spec("table3_col2", "iat_d", vec![SitScore, WIndices, LexicalDensity, XSocio]),
        spec("framing_col1", "sit", vec![Framing]),
        spec("framing_col2", "sit", vec![Framing, IatRev, XSocio]),
        spec(
            "framing_col3",
            "sit",
            vec![Framing, IatRev, IatScore, WIndices, XSocio, LexicalDensity],
        ),
    ];
    for outcome in ["sit", "sit_sd", "sit_factor"] {
        v.push(spec(&format!("robustness_{outcome}"), outcome, full()));
    }
    v
}

/// Groups of specs reported side by side.
pub fn builtin_group(name: &str) -> Option<Vec<DesignSpec>> {
    let prefix = match name {
        "table2" => "table2_",
        "table3" => "table3_",
        "framing" => "framing_",
        "robustness" => "robustness_",
        _ => return None,
    };
    Some(
        builtin_specs()
            .into_iter()
            .filter(|s| s.name.starts_with(prefix))
            .collect(),
    )
}

/// A single spec or a group, by name.
pub fn builtin(name: &str) -> Result<Vec<DesignSpec>> {
    if let Some(g) = builtin_group(name) {
        return Ok(g);
    }
    builtin_specs()
        .into_iter()
        .find(|s| s.name == name)
        .map(|s| vec![s])
        .ok_or_else(|| {
            let names: Vec<String> = builtin_specs().into_iter().map(|s| s.name).collect();
            Error::validation(format!(
                "unknown model '{name}'; try table2, table3, framing, robustness or one of {}",
                names.join(", ")
            ))
        })
}
