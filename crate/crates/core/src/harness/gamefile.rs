//! Declarative TOML game files.
//!
//! ```toml
//! [[players]]
//! name = "p1"
//! actions = ["alpha", "beta"]
//! observes = ["lo", "hi"]        # optional; singleton when omitted
//!
//! [events]                       # optional for static games
//! manager = ["calm", "storm"]    # optional manager-only component
//! pmf = [{ event = ["calm", "lo", "x"], p = 0.5 }, ...]
//! # or: product = [[0.3, 0.7], [0.5, 0.5], [1.0]]
//!
//! [utilities.p1]
//! default = 0.0
//! table = [[...], ...]           # optional dense rows, one per joint event
//! entries = [{ action = ["alpha", "beta"], event = ["calm", "lo", "x"], value = 5.0 }]
//!
//! [fairness]                     # optional
//! kind = "weighted-log"
//! weights = [10.0, 1.0]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fairness::FairnessFunction;
use crate::game::{validate_game, GameSpec, RawGame};

/// Label of the single value of an omitted event component.
pub const SINGLETON_EVENT: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: Vec<PlayerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<EventsSection>,
    #[serde(default)]
    pub utilities: BTreeMap<String, UtilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSection {
    pub name: String,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manager: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<PmfEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfEntry {
    pub event: Vec<String>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    #[serde(default)]
    pub default: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<UtilityTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<UtilityEntry>,
}

/// Dense utilities: one row per joint event, each indexed by joint action
/// (player 1 most significant). A flat list is accepted for static games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UtilityTable {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityEntry {
    pub action: Vec<String>,
    /// Omitted for static games.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Vec<String>>,
    pub value: f64,
}

fn parse_err(section: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        section: section.into(),
        message: message.into(),
    }
}

fn lookup(alphabet: &[String], label: &str, section: &str, what: &str) -> Result<usize, HarnessError> {
    alphabet
        .iter()
        .position(|a| a == label)
        .ok_or_else(|| parse_err(section, format!("unknown {what} `{label}` (expected one of {alphabet:?})")))
}

fn encode(alphabets: &[Vec<String>], labels: &[String], section: &str, what: &str) -> Result<usize, HarnessError> {
    if labels.len() != alphabets.len() {
        return Err(parse_err(
            section,
            format!("{what} has {} components, expected {}", labels.len(), alphabets.len()),
        ));
    }
    let mut index = 0;
    for (k, (alphabet, label)) in alphabets.iter().zip(labels).enumerate() {
        index = index * alphabet.len() + lookup(alphabet, label, section, &format!("{what} component {k}"))?;
    }
    Ok(index)
}

impl GameFile {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| parse_err("document", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("game files always serialize")
    }

    /// Resolves labels into a raw game; validation happens in
    /// [`GameFile::to_game`].
    pub fn to_raw(&self) -> Result<RawGame, HarnessError> {
        if self.players.is_empty() {
            return Err(parse_err("players", "no players declared"));
        }
        let player_names: Vec<String> = self.players.iter().map(|p| p.name.clone()).collect();
        let actions: Vec<Vec<String>> = self.players.iter().map(|p| p.actions.clone()).collect();
        let singleton = || vec![SINGLETON_EVENT.to_string()];
        let mut events = vec![self.events.as_ref().and_then(|e| e.manager.clone()).unwrap_or_else(singleton)];
        events.extend(self.players.iter().map(|p| p.observes.clone().unwrap_or_else(singleton)));
        let ne: usize = events.iter().map(Vec::len).product();
        let na: usize = actions.iter().map(Vec::len).product();

        let pmf = self.resolve_pmf(&events, ne)?;

        let mut utilities = Vec::with_capacity(player_names.len());
        for name in &player_names {
            let section = format!("utilities.{name}");
            let spec = self
                .utilities
                .get(name)
                .ok_or_else(|| parse_err(&section, "missing utility section"))?;
            let mut table = vec![spec.default; ne * na];
            match &spec.table {
                None => {}
                Some(UtilityTable::Flat(flat)) => {
                    if flat.len() != ne * na {
                        return Err(parse_err(
                            format!("{section}.table"),
                            format!("has {} values, expected {}", flat.len(), ne * na),
                        ));
                    }
                    table.copy_from_slice(flat);
                }
                Some(UtilityTable::Rows(rows)) => {
                    if rows.len() != ne {
                        return Err(parse_err(
                            format!("{section}.table"),
                            format!("has {} rows, expected one per joint event ({ne})", rows.len()),
                        ));
                    }
                    for (e, row) in rows.iter().enumerate() {
                        if row.len() != na {
                            return Err(parse_err(
                                format!("{section}.table[{e}]"),
                                format!("has {} values, expected {na}", row.len()),
                            ));
                        }
                        table[e * na..(e + 1) * na].copy_from_slice(row);
                    }
                }
            }
            for (k, entry) in spec.entries.iter().enumerate() {
                let row = format!("{section}.entries[{k}]");
                let a = encode(&actions, &entry.action, &row, "action")?;
                let e = match &entry.event {
                    Some(labels) => encode(&events, labels, &row, "event")?,
                    None if ne == 1 => 0,
                    None => return Err(parse_err(&row, "event is required when the game has random events")),
                };
                table[e * na + a] = entry.value;
            }
            utilities.push(table);
        }
        for name in self.utilities.keys() {
            if !player_names.contains(name) {
                return Err(parse_err(format!("utilities.{name}"), "no player with this name"));
            }
        }

        let caps = if self.players.iter().any(|p| p.cap.is_some()) {
            Some(
                self.players
                    .iter()
                    .zip(&utilities)
                    .map(|(p, t)| p.cap.unwrap_or_else(|| t.iter().copied().fold(0.0, f64::max)))
                    .collect(),
            )
        } else {
            None
        };

        Ok(RawGame {
            player_names,
            actions,
            events,
            pmf,
            utilities,
            caps,
        })
    }

    fn resolve_pmf(&self, events: &[Vec<String>], ne: usize) -> Result<Vec<f64>, HarnessError> {
        let section = self.events.as_ref();
        match (section.and_then(|s| s.pmf.as_ref()), section.and_then(|s| s.product.as_ref())) {
            (Some(_), Some(_)) => Err(parse_err("events", "give either `pmf` or `product`, not both")),
            (Some(entries), None) => {
                let mut pmf = vec![0.0; ne];
                for (k, entry) in entries.iter().enumerate() {
                    let row = format!("events.pmf[{k}]");
                    let e = encode(events, &entry.event, &row, "event")?;
                    pmf[e] += entry.p;
                }
                Ok(pmf)
            }
            (None, Some(factors)) => {
                if factors.len() != events.len() {
                    return Err(parse_err(
                        "events.product",
                        format!("has {} factors, expected one per event component ({})", factors.len(), events.len()),
                    ));
                }
                let mut pmf = vec![1.0];
                for (k, (factor, alphabet)) in factors.iter().zip(events).enumerate() {
                    if factor.len() != alphabet.len() {
                        return Err(parse_err(
                            format!("events.product[{k}]"),
                            format!("has {} values, expected {}", factor.len(), alphabet.len()),
                        ));
                    }
                    pmf = pmf.iter().flat_map(|p| factor.iter().map(move |q| p * q)).collect();
                }
                Ok(pmf)
            }
            (None, None) if ne == 1 => Ok(vec![1.0]),
            (None, None) => Err(parse_err("events", "random events need a `pmf` or `product`")),
        }
    }

    pub fn to_game(&self) -> Result<GameSpec, HarnessError> {
        Ok(validate_game(self.to_raw()?)?)
    }

    /// Dense, label-complete description of a game.
    pub fn from_game(game: &GameSpec, fairness: Option<FairnessFunction>) -> Self {
        let raw = game.to_raw();
        let n = raw.player_names.len();
        let na: usize = raw.actions.iter().map(Vec::len).product();
        let players = (0..n)
            .map(|i| PlayerSection {
                name: raw.player_names[i].clone(),
                actions: raw.actions[i].clone(),
                observes: (raw.events[i + 1] != [SINGLETON_EVENT]).then(|| raw.events[i + 1].clone()),
                cap: None,
            })
            .collect();
        let events = if game.num_joint_events() == 1 && raw.events.iter().all(|a| a == &[SINGLETON_EVENT]) {
            None
        } else {
            Some(EventsSection {
                manager: (raw.events[0] != [SINGLETON_EVENT]).then(|| raw.events[0].clone()),
                pmf: Some(
                    raw.pmf
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(e, &p)| PmfEntry {
                            event: game.event_radix().decode(e).iter().enumerate().map(|(k, &d)| raw.events[k][d].clone()).collect(),
                            p,
                        })
                        .collect(),
                ),
                product: None,
            })
        };
        let utilities = (0..n)
            .map(|i| {
                let rows = raw.utilities[i].chunks(na).map(<[f64]>::to_vec).collect();
                (
                    raw.player_names[i].clone(),
                    UtilitySection {
                        default: 0.0,
                        table: Some(UtilityTable::Rows(rows)),
                        entries: Vec::new(),
                    },
                )
            })
            .collect();
        Self {
            players,
            events,
            utilities,
            fairness,
        }
    }
}

pub fn parse_game_file(path: &Path) -> Result<(GameSpec, Option<FairnessFunction>), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = GameFile::from_toml(&text)?;
    let game = file.to_game()?;
    if let Some(phi) = &file.fairness {
        phi.validate(game.num_players())?;
    }
    Ok((game, file.fairness))
}
