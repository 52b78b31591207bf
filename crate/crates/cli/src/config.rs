//! Plain-text study configuration for `maxdcor power --config`.
//!
//! Format: `key = value` lines, `#` comments, and one `[curve]` section per
//! sweep. Global keys: `name`, `alpha`, `replicates`, `permutations`,
//! `methods` (comma list of max/avg/full), `tests` (comma list of
//! chisquare/permutation). Curve keys: `family` (fixed_dep, increasing_dep,
//! vanishing), `relationship`, `n`, and either `p_grid` (fixed/vanishing
//! families) or `p`, `q`, `d_grid` (increasing family). Grids are comma
//! lists or inclusive ranges like `1..10`.

use std::path::Path;

use maxdcor::{
    CurveSpec, Method, Relationship, ScenarioFamily, StudyConfig, Sweep, TestKind,
};

#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

fn fail(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct CurveDraft {
    start_line: usize,
    family: Option<ScenarioFamily>,
    relationship: Option<Relationship>,
    n: Option<usize>,
    p: Option<usize>,
    q: Option<usize>,
    p_grid: Option<Vec<usize>>,
    d_grid: Option<Vec<usize>>,
}

impl CurveDraft {
    fn build(self) -> Result<CurveSpec, ConfigError> {
        let at = self.start_line;
        let family = self
            .family
            .ok_or_else(|| fail(at, "curve is missing `family`"))?;
        let n = self.n.ok_or_else(|| fail(at, "curve is missing `n`"))?;
        let relationship = match family {
            ScenarioFamily::Vanishing => self.relationship.unwrap_or(Relationship::Linear),
            _ => self
                .relationship
                .ok_or_else(|| fail(at, "curve is missing `relationship`"))?,
        };
        let sweep = match family {
            ScenarioFamily::FixedDep | ScenarioFamily::Vanishing => {
                let grid = self
                    .p_grid
                    .ok_or_else(|| fail(at, "curve is missing `p_grid`"))?;
                if self.d_grid.is_some() {
                    return Err(fail(at, "`d_grid` does not apply to this family"));
                }
                Sweep::OverP(grid)
            }
            ScenarioFamily::IncreasingDep => {
                let p = self.p.ok_or_else(|| fail(at, "curve is missing `p`"))?;
                let q = self.q.ok_or_else(|| fail(at, "curve is missing `q`"))?;
                let values = self
                    .d_grid
                    .ok_or_else(|| fail(at, "curve is missing `d_grid`"))?;
                Sweep::OverD { p, q, values }
            }
        };
        Ok(CurveSpec {
            family,
            relationship,
            n,
            sweep,
        })
    }
}

pub fn parse_study_config(path: &Path) -> Result<StudyConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(0, format!("cannot read {}: {e}", path.display())))?;
    parse_study_text(&text)
}

pub fn parse_study_text(text: &str) -> Result<StudyConfig, ConfigError> {
    let mut config = StudyConfig {
        name: "custom".to_string(),
        curves: Vec::new(),
        methods: vec![Method::Max, Method::Avg, Method::Full],
        test_kinds: vec![TestKind::ChiSquare],
        alpha: 0.05,
        replicates: 200,
        permutations: 1000,
    };
    let mut current: Option<CurveDraft> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[curve]" {
            if let Some(draft) = current.take() {
                config.curves.push(draft.build()?);
            }
            current = Some(CurveDraft {
                start_line: line_no,
                ..CurveDraft::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());

        match &mut current {
            None => match key {
                "name" => config.name = value.to_string(),
                "alpha" => {
                    config.alpha = value
                        .parse()
                        .map_err(|_| fail(line_no, format!("bad alpha: {value:?}")))?
                }
                "replicates" => {
                    config.replicates = parse_usize(value, line_no)?;
                }
                "permutations" => {
                    config.permutations = parse_usize(value, line_no)?;
                }
                "methods" => {
                    config.methods = split_list(value)
                        .map(|s| s.parse::<Method>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| fail(line_no, e.to_string()))?;
                }
                "tests" => {
                    config.test_kinds = split_list(value)
                        .map(|s| s.parse::<TestKind>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| fail(line_no, e.to_string()))?;
                }
                other => return Err(fail(line_no, format!("unknown global key {other:?}"))),
            },
            Some(draft) => match key {
                "family" => {
                    draft.family = Some(match value {
                        "fixed_dep" => ScenarioFamily::FixedDep,
                        "increasing_dep" => ScenarioFamily::IncreasingDep,
                        "vanishing" => ScenarioFamily::Vanishing,
                        other => return Err(fail(line_no, format!("unknown family {other:?}"))),
                    })
                }
                "relationship" => {
                    draft.relationship = Some(
                        value
                            .parse::<Relationship>()
                            .map_err(|e| fail(line_no, e.to_string()))?,
                    )
                }
                "n" => draft.n = Some(parse_usize(value, line_no)?),
                "p" => draft.p = Some(parse_usize(value, line_no)?),
                "q" => draft.q = Some(parse_usize(value, line_no)?),
                "p_grid" => draft.p_grid = Some(parse_grid(value, line_no)?),
                "d_grid" => draft.d_grid = Some(parse_grid(value, line_no)?),
                other => return Err(fail(line_no, format!("unknown curve key {other:?}"))),
            },
        }
    }
    if let Some(draft) = current.take() {
        config.curves.push(draft.build()?);
    }
    if config.curves.is_empty() {
        return Err(fail(0, "configuration declares no [curve] sections"));
    }
    Ok(config)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_usize(value: &str, line: usize) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| fail(line, format!("bad integer: {value:?}")))
}

/// `1, 2, 5` or an inclusive range `1..10`.
fn parse_grid(value: &str, line: usize) -> Result<Vec<usize>, ConfigError> {
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: usize = parse_usize(lo.trim(), line)?;
        let hi: usize = parse_usize(hi.trim(), line)?;
        if hi < lo {
            return Err(fail(line, format!("empty range {value:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    let grid: Vec<usize> = split_list(value)
        .map(|s| parse_usize(s, line))
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(fail(line, "empty grid"));
    }
    Ok(grid)
}
