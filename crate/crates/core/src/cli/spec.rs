//! Declarative architecture and experiment descriptions.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};
use crate::optimize::{Objective, OptimizeOptions};
use crate::topology::{effective_l, ArchKind, Architecture};

/// Band or stem width: a number, or `"optimal"` for `2L - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Fixed(usize),
    Named(WidthName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthName {
    Optimal,
}

impl Width {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("optimal") {
            Ok(Width::Named(WidthName::Optimal))
        } else {
            s.parse()
                .map(Width::Fixed)
                .map_err(|_| Error::invalid(format!("width must be a number or \"optimal\", got {s:?}")))
        }
    }

    pub fn resolve(self, l: usize) -> usize {
        match self {
            Width::Fixed(q) => q,
            Width::Named(WidthName::Optimal) => (2 * l).saturating_sub(1),
        }
    }
}

/// Architecture description independent of `N_I`. Centers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Width>,
    /// Number of groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    /// Elements per group; alternative to `groups`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ArchSpec {
    pub fn kind(kind: &str) -> Self {
        Self { kind: kind.to_string(), ..Default::default() }
    }

    pub fn with_q(kind: &str, q: Width) -> Self {
        Self { kind: kind.to_string(), q: Some(q), ..Default::default() }
    }

    /// Builds the architecture on `n` ports for width parameter `l`.
    pub fn build(&self, n: usize, l: usize) -> Result<Architecture> {
        let q = || self.q.map(|w| w.resolve(l)).ok_or_else(|| Error::invalid(format!("{} needs q", self.kind)));
        let kind = match self.kind.as_str() {
            "single" => ArchKind::Single,
            "fully" => ArchKind::Fully,
            "tridiagonal" | "tree" => ArchKind::Tridiagonal,
            "arrowhead" => ArchKind::Arrowhead,
            "group" => {
                let groups = match (self.groups, self.group_size) {
                    (Some(g), None) => g,
                    (None, Some(size)) if size > 0 && n.is_multiple_of(size) => n / size,
                    (None, Some(size)) => {
                        return Err(Error::invalid(format!("group size {size} must divide N_I = {n}")))
                    }
                    _ => return Err(Error::invalid("group needs exactly one of groups or group_size")),
                };
                ArchKind::Group { groups }
            }
            "band" => ArchKind::Band { q: q()? },
            "stem" => {
                let q = q()?;
                let centers = match &self.centers {
                    Some(c) => c
                        .iter()
                        .map(|&c| c.checked_sub(1).ok_or_else(|| Error::invalid("centers are 1-based")))
                        .collect::<Result<Vec<_>>>()?,
                    None => (0..q).collect(),
                };
                ArchKind::Stem { q, centers }
            }
            other => return Err(Error::invalid(format!("unknown architecture kind {other:?}"))),
        };
        Architecture::new(kind, n)
    }

    pub fn label(&self, arch: &Architecture) -> String {
        self.label.clone().unwrap_or_else(|| arch.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NRis,
    Q,
    GroupSize,
    NUsers,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NRis => "n_ris",
            SweepAxis::Q => "q",
            SweepAxis::GroupSize => "group_size",
            SweepAxis::NUsers => "n_users",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

fn default_trials() -> usize {
    1
}

/// One experiment: a scenario, a list of architectures, an objective and an
/// optional sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub architectures: Vec<ArchSpec>,
    pub objective: Objective,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Reproduce the fully-connected optimum on optimal-class architectures
    /// instead of optimizing them separately.
    #[serde(default)]
    pub equalize: bool,
    #[serde(default)]
    pub optimizer: OptimizeOptions,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.architectures.is_empty() {
            return Err(Error::invalid("no architectures listed"));
        }
        self.scenario.validate()?;
        for (value, scenario) in self.points()? {
            let l = effective_l(&scenario.dims, scenario.dims.streams.is_some());
            for spec in self.architectures_at(value) {
                spec.build(scenario.dims.n_ris, l)?;
            }
        }
        Ok(())
    }

    /// `(sweep value, scenario)` pairs; a single point without a sweep.
    pub fn points(&self) -> Result<Vec<(Option<usize>, ScenarioConfig)>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(None, self.scenario.clone())]);
        };
        if sweep.values.is_empty() {
            return Err(Error::invalid("sweep has no values"));
        }
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut s = self.scenario.clone();
                match sweep.axis {
                    SweepAxis::NRis => {
                        if v == 0 {
                            return Err(Error::invalid("n_ris sweep values must be positive"));
                        }
                        s.dims.n_ris = v;
                    }
                    SweepAxis::NUsers => {
                        if v == 0 {
                            return Err(Error::invalid("n_users sweep values must be positive"));
                        }
                        s.dims.users = vec![1; v];
                        s.dims.streams = None;
                    }
                    SweepAxis::Q | SweepAxis::GroupSize => {}
                }
                s.validate()?;
                Ok((Some(v), s))
            })
            .collect()
    }

    /// Architecture specs with the sweep value substituted where it applies.
    pub fn architectures_at(&self, value: Option<usize>) -> Vec<ArchSpec> {
        self.architectures
            .iter()
            .map(|spec| {
                let mut spec = spec.clone();
                if let (Some(v), Some(sweep)) = (value, &self.sweep) {
                    match sweep.axis {
                        SweepAxis::Q if spec.kind == "band" || spec.kind == "stem" => {
                            spec.q = Some(Width::Fixed(v));
                            spec.centers = None;
                        }
                        SweepAxis::GroupSize if spec.kind == "group" => {
                            spec.groups = None;
                            spec.group_size = Some(v);
                        }
                        _ => {}
                    }
                }
                spec
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_parsing() {
        assert_eq!(Width::parse("3").unwrap(), Width::Fixed(3));
        assert_eq!(Width::parse("optimal").unwrap().resolve(4), 7);
        assert!(Width::parse("wide").is_err());
        let w: Width = serde_json::from_str("\"optimal\"").unwrap();
        assert_eq!(w.resolve(2), 3);
    }

    #[test]
    fn arch_spec_builds() {
        let stem = ArchSpec { centers: Some(vec![2, 5]), ..ArchSpec::with_q("stem", Width::Fixed(2)) };
        let a = stem.build(6, 1).unwrap();
        assert!(a.is_connected(1, 0) && a.is_connected(4, 5) && !a.is_connected(0, 2));
        let g = ArchSpec { group_size: Some(4), ..ArchSpec::kind("group") };
        assert_eq!(g.build(16, 4).unwrap().complexity_count(), 40);
        assert!(ArchSpec { group_size: Some(3), ..ArchSpec::kind("group") }.build(16, 4).is_err());
        assert_eq!(
            ArchSpec::with_q("band", Width::Named(WidthName::Optimal)).build(16, 4).unwrap().label(),
            "band(q=7)"
        );
    }

    #[test]
    fn experiment_spec_parses_with_defaults() {
        let json = r#"{
            "architectures": [{"kind": "band", "q": "optimal"}, {"kind": "group", "group_size": 4}],
            "objective": "sum_channel_gain",
            "sweep": {"axis": "q", "values": [1, 3]},
            "trials": 2
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        spec.validate().unwrap();
        let archs = spec.architectures_at(Some(3));
        assert_eq!(archs[0].q, Some(Width::Fixed(3)));
        assert_eq!(archs[1].group_size, Some(4));
        assert_eq!(spec.points().unwrap().len(), 2);
    }
}
