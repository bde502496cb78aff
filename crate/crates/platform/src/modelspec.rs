//! Regression model specs: built-in names or TOML files.
//!
//! ```toml
//! [[model]]
//! name = "age_only"
//! outcome = "sit"
//! blocks = ["iat_rev", { numeric = { column = "age" } }]
//!
//! [model.reference_levels]
//! birth_area = "South"
//! ```
//!
//! Unit blocks are `iat_rev`, `iat_score`, `sit_score`, `w_indices`,
//! `x_socio`, `lexical_density` and `framing`; `numeric` and `categorical`
//! take a column (and a label or reference level).

use std::path::Path;

use serde::Deserialize;
use sit_core::stats::{builtin, DesignSpec};

use crate::error::{PlatformError, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    model: Vec<DesignSpec>,
}

pub fn parse_specs(text: &str, name: &str) -> Result<Vec<DesignSpec>> {
    let f: SpecFile = toml::from_str(text).map_err(|e| PlatformError::format(name, e.to_string()))?;
    if f.model.is_empty() {
        return Err(PlatformError::format(name, "no [[model]] entries"));
    }
    Ok(f.model)
}

/// `arg` is a path to a `.toml` file or a built-in model or group name.
pub fn resolve(arg: &str) -> Result<Vec<DesignSpec>> {
    let p = Path::new(arg);
    if arg.ends_with(".toml") || p.is_file() {
        let text = std::fs::read_to_string(p).map_err(|e| PlatformError::io(p, e))?;
        return parse_specs(&text, arg);
    }
    Ok(builtin(arg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sit_core::stats::Block;

    #[test]
    fn parses_doc_example() {
        let text = r#"
[[model]]
name = "age_only"
outcome = "sit"
blocks = ["iat_rev", { numeric = { column = "age" } }]

[model.reference_levels]
birth_area = "South"
"#;
        let s = parse_specs(text, "t").unwrap();
        assert_eq!(s[0].blocks[0], Block::IatRev);
        assert_eq!(
            s[0].blocks[1],
            Block::Numeric {
                column: "age".into(),
                label: None
            }
        );
        assert_eq!(s[0].reference_levels["birth_area"], "South");
        assert!(parse_specs("[[model]]\nname='x'\n", "t").is_err());
        assert!(resolve("table2").unwrap().len() == 6);
    }
}
