//! Baseline controllers shipped with the harness.
//!
//! `iteration1`..`iteration3` reconstruct the three successive strategies a
//! language model produced for the streetlight task, from their prose
//! descriptions; `always_on` and `always_off` bracket the energy range.

use super::ast::RuleProgram;
use super::{parse_source, SourceError};

pub const BUILTIN_PROGRAMS: [&str; 5] = ["always_off", "always_on", "iteration1", "iteration2", "iteration3"];

/// Idle ticks before the first baseline dims its lamp.
pub const IDLE_CYCLES: u32 = 5;

pub const ALWAYS_ON: &str = "light = 1.0  listen = 1  broadcast = 0";

pub const ALWAYS_OFF: &str = "light = 0.0  listen = 0  broadcast = 0";

/// Permanently listening; follows a neighbour's signal, dims once idle.
pub const ITERATION1: &str = "\
# always listening, whatever the ambient light
listen = 1
if motion then
  light = 1.0
  broadcast = 1.0
else
  broadcast = 0.0
  if signal > 0.5 then
    light = 0.6
  else
    if ticks_since_motion > 5 then
      light = 0.1
    end
  end
end
";

/// Lights up ahead of pedestrians announced by neighbours; keeps a subdued
/// glow only in very dark conditions.
pub const ITERATION2: &str = "\
listen = 1
if motion then
  light = 1.0
  broadcast = 1.0
else
  broadcast = 0.0
  if signal > 0.5 then
    light = 0.8
  else
    if ambient < 0.1 then
      light = 0.2
    else
      light = 0.0
    end
  end
end
";

/// Broadcasts only on the first tick of a motion episode, listens only while
/// its own lamp is low, and halves the lamp each idle tick.
pub const ITERATION3: &str = "\
if motion then
  if mem.seen == 0 then
    broadcast = 1.0
  else
    broadcast = 0.0
  end
  mem.seen = 1
  light = 1.0
else
  mem.seen = 0
  broadcast = 0.0
  if signal > 0.5 then
    light = 0.8
  else
    light = light * 0.5
  end
end
if light < 0.5 then
  listen = 1
else
  listen = 0
end
";

pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "always_on" => Some(ALWAYS_ON),
        "always_off" => Some(ALWAYS_OFF),
        "iteration1" => Some(ITERATION1),
        "iteration2" => Some(ITERATION2),
        "iteration3" => Some(ITERATION3),
        _ => None,
    }
}

pub fn builtin_program(name: &str) -> Result<RuleProgram, SourceError> {
    let src = builtin_source(name).ok_or_else(|| SourceError::UnknownBaseline(name.to_string()))?;
    parse_source(src)
}
