//! Turning a [`DataTable`] and a declarative spec into a design matrix.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::scales::ScaleName;
use crate::stats::data::{Column, DataTable};
use crate::stats::describe::{mean, std_dev, Variance};

pub const BIRTH_AREA: &str = "birth_area";
pub const FRAMING: &str = "framing";

/// Named groups of regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// `iat_rev`: 1 when IAT feedback was shown before the SIT.
    IatRev,
    /// `iat_d`, z-scored over the rows that enter the model.
    IatScore,
    /// `sit`, for models with the IAT score as outcome.
    SitScore,
    /// The six questionnaire indices.
    WIndices,
    /// Sociodemographic controls, with birth area dummy-coded.
    XSocio,
    LexicalDensity,
    /// Framing arm dummies.
    Framing,
    Numeric {
        column: String,
        label: Option<String>,
    },
    Categorical {
        column: String,
        reference: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub name: String,
    pub outcome: String,
    #[serde(default)]
    pub blocks: Vec<Block>,
    /// Column → reference level for dummy coding. Defaults: birth area
    /// `Center`, framing `InfoGuilt`.
    #[serde(default)]
    pub reference_levels: BTreeMap<String, String>,
}

impl DesignSpec {
    pub fn new(name: impl Into<String>, outcome: impl Into<String>, blocks: Vec<Block>) -> Self {
        DesignSpec {
            name: name.into(),
            outcome: outcome.into(),
            blocks,
            reference_levels: BTreeMap::new(),
        }
    }

    fn reference(&self, column: &str) -> Option<String> {
        if let Some(r) = self.reference_levels.get(column) {
            return Some(r.clone());
        }
        match column {
            BIRTH_AREA => Some("Center".into()),
            FRAMING => Some("InfoGuilt".into()),
            _ => None,
        }
    }
}

pub const SOCIO_NUMERIC: [(&str, &str); 8] = [
    ("like_teaching", "Like Teaching"),
    ("gender", "Gender"),
    ("age", "Age"),
    ("master", "Master"),
    ("disability_training", "Disability training"),
    ("married", "Married"),
    ("teaching_italian", "Teaching Italian"),
    ("teaching_maths", "Teaching Maths"),
];

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Numeric {
        column: String,
        label: String,
        zscore: bool,
    },
    Dummies {
        column: String,
        reference: String,
    },
}

impl Term {
    fn column(&self) -> &str {
        match self {
            Term::Numeric { column, .. } | Term::Dummies { column, .. } => column,
        }
    }
}

fn num(column: &str, label: &str) -> Term {
    Term::Numeric {
        column: column.into(),
        label: label.into(),
        zscore: false,
    }
}

fn expand(spec: &DesignSpec) -> Result<Vec<Term>> {
    let mut terms = Vec::new();
    let dummies = |column: &str, reference: Option<String>| -> Result<Term> {
        let reference = reference
            .or_else(|| spec.reference(column))
            .ok_or_else(|| Error::validation(format!("no reference level for '{column}'")))?;
        Ok(Term::Dummies {
            column: column.into(),
            reference,
        })
    };
    for b in &spec.blocks {
        match b {
            Block::IatRev => terms.push(num("iat_rev", "IAT Revelation")),
            Block::IatScore => terms.push(Term::Numeric {
                column: "iat_d".into(),
                label: "IAT score".into(),
                zscore: true,
            }),
            Block::SitScore => terms.push(num("sit", "SIT Score")),
            Block::WIndices => terms.extend(ScaleName::ALL.iter().map(|s| num(s.key(), s.label()))),
            Block::XSocio => {
                terms.extend(SOCIO_NUMERIC.iter().map(|(c, l)| num(c, l)));
                terms.push(dummies(BIRTH_AREA, None)?);
            }
            Block::LexicalDensity => terms.push(num("lexical_density", "Lexical Density")),
            Block::Framing => terms.push(dummies(FRAMING, None)?),
            Block::Numeric { column, label } => {
                terms.push(num(column, label.as_deref().unwrap_or(column)));
            }
            Block::Categorical { column, reference } => terms.push(dummies(column, Some(reference.clone()))?),
        }
    }
    let mut seen = HashSet::new();
    for t in &terms {
        if !seen.insert(t.column().to_string()) {
            return Err(Error::validation(format!(
                "column '{}' appears twice in {}",
                t.column(),
                spec.name
            )));
        }
    }
    if seen.contains(&spec.outcome) {
        return Err(Error::validation(format!(
            "outcome '{}' is also a regressor",
            spec.outcome
        )));
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub model: String,
    pub outcome: String,
    /// Machine names, `(Intercept)` first; dummies are `column=level`.
    pub names: Vec<String>,
    pub labels: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Table rows that entered the model.
    pub rows: Vec<usize>,
    /// Rows dropped for missing values.
    pub dropped: usize,
}

pub const INTERCEPT: &str = "(Intercept)";

pub fn build_design(table: &DataTable, spec: &DesignSpec) -> Result<Design> {
    let terms = expand(spec)?;
    let outcome = table.numeric_values(&spec.outcome)?;
    let mut cols = Vec::with_capacity(terms.len());
    for t in &terms {
        let c = table.column(t.column())?;
        match (t, c) {
            (Term::Numeric { column, .. }, Column::Categorical(_)) => {
                return Err(Error::validation(format!("column '{column}' must be numeric")))
            }
            (Term::Dummies { column, .. }, Column::Numeric(_)) => {
                return Err(Error::validation(format!("column '{column}' must be categorical")))
            }
            _ => cols.push(c),
        }
    }
    let rows: Vec<usize> = (0..table.n_rows())
        .filter(|&i| outcome[i].is_some_and(f64::is_finite) && cols.iter().all(|c| !c.is_missing(i)))
        .collect();
    let dropped = table.n_rows() - rows.len();
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: every row has a missing value",
            spec.name
        )));
    }
    let mut names = vec![INTERCEPT.to_string()];
    let mut labels = vec!["Constant".to_string()];
    let mut data: Vec<Vec<f64>> = vec![vec![1.0; rows.len()]];
    for (t, c) in terms.iter().zip(&cols) {
        match (t, c) {
            (Term::Numeric { column, label, zscore }, Column::Numeric(v)) => {
                let mut xs: Vec<f64> = rows.iter().map(|&i| v[i].unwrap()).collect();
                if *zscore {
                    let m = mean(&xs).unwrap();
                    let sd = std_dev(&xs, Variance::Sample).unwrap_or(0.0);
                    if !(sd > 0.0) {
                        return Err(Error::degenerate(format!("column '{column}' has zero variance")));
                    }
                    xs.iter_mut().for_each(|x| *x = (*x - m) / sd);
                }
                names.push(column.clone());
                labels.push(label.clone());
                data.push(xs);
            }
            (Term::Dummies { column, reference }, Column::Categorical(v)) => {
                let levels: BTreeSet<&str> = rows.iter().map(|&i| v[i].as_deref().unwrap()).collect();
                if !levels.contains(reference.as_str()) {
                    return Err(Error::validation(format!(
                        "reference level '{reference}' of '{column}' does not occur in the data"
                    )));
                }
                for level in levels.iter().filter(|l| **l != reference) {
                    names.push(format!("{column}={level}"));
                    labels.push(level.to_string());
                    data.push(
                        rows.iter()
                            .map(|&i| f64::from(v[i].as_deref() == Some(level)))
                            .collect(),
                    );
                }
            }
            _ => unreachable!(),
        }
    }
    let x = DMatrix::from_fn(rows.len(), data.len(), |i, j| data[j][i]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| outcome[i].unwrap()));
    Ok(Design {
        model: spec.name.clone(),
        outcome: spec.outcome.clone(),
        names,
        labels,
        x,
        y,
        rows,
        dropped,
    })
}
