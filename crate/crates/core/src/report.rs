//! CSV tables and JSON helpers.
//!
//! JSON has no representation for infinities or NaN, which do occur in
//! reports (a diverging gradient, an undefined residual in autarky). Fields
//! that may hold them go through [`lenient_f64`], which writes them as the
//! strings `"inf"`, `"-inf"` and `"NaN"`.

use std::io::Write;

use crate::economy::Economy;
use crate::mechanism::{allocate, CurvePoint, MechanismError, OfferProfile};
use crate::solver::HomotopyTrace;

pub mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> csv::Result<()> {
    w.flush()?;
    Ok(())
}

/// `epsilon,iterations,converged,residual,price,A,B,offer_1,...,offer_n`
pub fn write_trace_csv<W: Write>(trace: &HomotopyTrace, n: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["epsilon", "iterations", "converged", "residual", "price", "A", "B"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("offer_{i}")));
    w.write_record(&header)?;
    for level in &trace.levels {
        let c = &level.candidate;
        let mut row = vec![
            num(level.epsilon),
            c.iterations.to_string(),
            c.converged.to_string(),
            num(c.residual),
            num(level.price),
            num(level.a),
            num(level.b),
        ];
        row.extend(c.profile.offers().iter().map(|&o| num(o)));
        w.write_record(&row)?;
    }
    finish(w)
}

/// `offer,payoff`
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["offer", "payoff"])?;
    for p in curve {
        w.write_record([num(p.offer), num(p.payoff)])?;
    }
    finish(w)
}

/// `id,side,offer,x,y` with 1-based ids.
pub fn write_allocation_csv<W: Write>(
    economy: &Economy,
    profile: &OfferProfile,
    epsilon: f64,
    out: W,
) -> Result<(), AllocationCsvError> {
    let alloc = allocate(economy, profile, epsilon)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "side", "offer", "x", "y"])?;
    for (i, (bundle, &offer)) in alloc.bundles.iter().zip(profile.offers()).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            economy.agent(i).side.to_string(),
            num(offer),
            num(bundle.x),
            num(bundle.y),
        ])?;
    }
    finish(w)?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum AllocationCsvError {
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "lenient_f64")]
        v: f64,
    }

    #[test]
    fn non_finite_round_trip() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let s = serde_json::to_string(&Holder { v }).unwrap();
            assert_eq!(serde_json::from_str::<Holder>(&s).unwrap().v, v);
        }
        let s = serde_json::to_string(&Holder { v: f64::NAN }).unwrap();
        assert_eq!(s, r#"{"v":"NaN"}"#);
        assert!(serde_json::from_str::<Holder>(&s).unwrap().v.is_nan());
    }

    #[test]
    fn curve_csv_layout() {
        let mut buf = Vec::new();
        let curve = [
            CurvePoint {
                offer: 0.0,
                payoff: 1.0,
            },
            CurvePoint {
                offer: 0.5,
                payoff: f64::NEG_INFINITY,
            },
        ];
        write_curve_csv(&curve, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "offer,payoff\n0.0,1.0\n0.5,-inf\n");
    }

    #[test]
    fn allocation_csv_layout() {
        let e = scenarios::corollary();
        let mut buf = Vec::new();
        write_allocation_csv(&e, &vec![1.0, 1.0, 1.0, 1.0].into(), 0.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,side,offer,x,y");
        assert_eq!(lines[1], "1,one,1.0,3.0,1.0");
        assert_eq!(lines[4], "4,two,1.0,1.0,3.0");
    }
}
