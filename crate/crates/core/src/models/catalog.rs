//! Presets addressable by a string id.

use super::{
    build_thermopiezo_law, count_field, preset_counterexample_positivity,
    preset_counterexample_range, Condition, ModelsError, ThermopiezoBlocks, ThermopiezoLaw,
};
use crate::evolve::HeatSetup;
use crate::homog::PeriodicField;
use crate::law::MaterialLaw;
use crate::Error;

#[derive(Clone, Debug)]
pub enum Preset {
    Heat1d {
        kappa: PeriodicField,
        setup: HeatSetup,
    },
    /// `(a(n·) + i)u = f` on a grid of 512 cells.
    CountAi {
        field: PeriodicField,
        grid: usize,
    },
    Tpz(Box<ThermopiezoLaw>),
    /// Scalar laws `z/n` for `n = 1, …, 8`.
    Positivity(Vec<MaterialLaw>),
    /// Projector laws in dimension 8 for `n = 1, …, 8`.
    Range(Vec<MaterialLaw>),
}

pub fn preset_ids() -> &'static [&'static str] {
    &["heat1d", "count_ai", "tpz", "positivity", "range"]
}

pub fn preset(id: &str) -> Result<Preset, Error> {
    Ok(match id {
        "heat1d" => Preset::Heat1d {
            kappa: kappa_by_id("two_phase_1_2")?,
            setup: HeatSetup::default(),
        },
        "count_ai" => Preset::CountAi {
            field: count_field(),
            grid: 512,
        },
        "tpz" => Preset::Tpz(Box::new(build_thermopiezo_law(
            &ThermopiezoBlocks::identity(),
            Condition::I,
        )?)),
        "positivity" => Preset::Positivity(
            (1..=8)
                .map(preset_counterexample_positivity)
                .collect::<Result<_, _>>()?,
        ),
        "range" => Preset::Range(
            (1..=8)
                .map(|n| preset_counterexample_range(8, n))
                .collect::<Result<_, _>>()?,
        ),
        other => return Err(ModelsError::UnknownPreset(other.into()).into()),
    })
}

/// `two_phase_A_B` (values `A` on `[0, ½)`, `B` on `[½, 1)`) or `constant_C`.
pub fn kappa_by_id(id: &str) -> Result<PeriodicField, Error> {
    let unknown = || Error::from(ModelsError::UnknownPreset(id.into()));
    let num = |s: &str| s.parse::<f64>().map_err(|_| unknown());
    if let Some(rest) = id.strip_prefix("two_phase_") {
        let (a, b) = rest.split_once('_').ok_or_else(unknown)?;
        return Ok(PeriodicField::two_phase(num(a)?, num(b)?)?);
    }
    if let Some(rest) = id.strip_prefix("constant_") {
        return Ok(PeriodicField::constant(num(rest)?)?);
    }
    Err(unknown())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_builds() {
        for id in preset_ids() {
            preset(id).unwrap();
        }
        assert!(matches!(
            preset("maxwell"),
            Err(Error::Models(ModelsError::UnknownPreset(_)))
        ));
    }

    #[test]
    fn kappa_ids() {
        let k = kappa_by_id("two_phase_1_2").unwrap();
        assert_eq!(k, PeriodicField::two_phase(1.0, 2.0).unwrap());
        assert_eq!(
            kappa_by_id("constant_2.5").unwrap(),
            PeriodicField::constant(2.5).unwrap()
        );
        assert!(kappa_by_id("two_phase_1").is_err());
        assert!(kappa_by_id("striped").is_err());
    }

    #[test]
    fn preset_laws_roundtrip_through_json() {
        let laws = match preset("range").unwrap() {
            Preset::Range(l) => l,
            _ => unreachable!(),
        };
        for l in laws {
            let back = MaterialLaw::from_json(&l.to_json()).unwrap();
            assert_eq!(back.max_coeff_diff(&l), 0.0);
        }
        if let Preset::Tpz(t) = preset("tpz").unwrap() {
            let back = MaterialLaw::from_json(&t.law.to_json()).unwrap();
            assert_eq!(back, t.law);
        }
    }
}
