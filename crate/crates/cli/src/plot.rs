use anyhow::{anyhow, bail, Result};
use serde_json::Value;

use skinlab::skinfield::SkinField;
use skinlab::surface::DiscreteHypersurface;

use crate::artifact::Artifact;

pub const KINDS: [&str; 4] = ["radial", "scatter", "band-sweep", "refinement"];

fn number(v: &Value, key: &str) -> Result<String> {
    let x = v.get(key).ok_or_else(|| anyhow!("record lacks '{key}'"))?;
    Ok(match x {
        Value::Null => "inf".into(),
        _ => x.to_string(),
    })
}

fn records<'a>(artifact: &'a Artifact, key: &str) -> Result<&'a Vec<Value>> {
    artifact
        .result
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("'{}' artifact has no {key}", artifact.kind))
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// CSV plot data of one kind from an artifact; `mesh` is needed for radial profiles.
pub fn emit_plot_data(artifact: &Artifact, mesh: Option<&DiscreteHypersurface>, kind: &str) -> Result<String> {
    let need = |kinds: &[&str]| -> Result<()> {
        if !kinds.contains(&artifact.kind.as_str()) {
            bail!("plot kind '{kind}' does not apply to a '{}' artifact", artifact.kind);
        }
        Ok(())
    };
    match kind {
        "radial" => {
            need(&["skin", "smooth"])?;
            let mesh = mesh.ok_or_else(|| anyhow!("radial plot data needs the mesh"))?;
            let skin = SkinField::from_json(&serde_json::to_string(&artifact.result)?)?;
            let rows = (0..mesh.vertex_count())
                .map(|v| {
                    vec![
                        mesh.radius(v).to_string(),
                        mesh.a_norm[v].to_string(),
                        skin.values[v].to_string(),
                        if skin.delta[v].is_finite() { skin.delta[v].to_string() } else { "inf".into() },
                    ]
                })
                .collect();
            table(&["r", "a_norm", "value", "delta"], rows)
        }
        "scatter" => {
            need(&["curve"])?;
            let rows = records(artifact, "certificates")?
                .iter()
                .map(|c| Ok(vec![number(c, "d")?, number(c, "length")?, number(c, "c")?]))
                .collect::<Result<_>>()?;
            table(&["d", "length", "c"], rows)
        }
        "band-sweep" => {
            need(&["hardy"])?;
            let rows = records(artifact, "bands")?
                .iter()
                .map(|b| Ok(vec![number(b, "band")?, number(b, "lambda")?]))
                .collect::<Result<_>>()?;
            table(&["band", "lambda"], rows)
        }
        "refinement" => {
            need(&["hardy"])?;
            let rows = records(artifact, "refinements")?
                .iter()
                .map(|b| Ok(vec![number(b, "refinement")?, number(b, "lambda")?]))
                .collect::<Result<_>>()?;
            table(&["refinement", "lambda"], rows)
        }
        _ => bail!("unknown plot kind '{kind}' (expected one of {})", KINDS.join(", ")),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use serde_json::json;

    use super::*;

    fn hardy() -> Artifact {
        Artifact::new(
            "hardy",
            BTreeMap::new(),
            vec![],
            json!({"bands": [{"band": 0.0, "lambda": 1.5}, {"band": 0.1, "lambda": 1.75}],
                   "refinements": [{"refinement": 150, "lambda": 1.25}]}),
        )
    }

    #[test]
    fn band_sweep_columns() {
        let csv = emit_plot_data(&hardy(), None, "band-sweep").unwrap();
        assert_eq!(csv, "band,lambda\n0.0,1.5\n0.1,1.75\n");
        assert_eq!(emit_plot_data(&hardy(), None, "refinement").unwrap(), "refinement,lambda\n150,1.25\n");
    }

    #[test]
    fn unknown_or_mismatched_kinds_fail() {
        assert!(emit_plot_data(&hardy(), None, "histogram").is_err());
        assert!(emit_plot_data(&hardy(), None, "scatter").is_err());
    }

    #[test]
    fn radial_columns() {
        let h = skinlab::surface::generate_lawson_cone(1, 1, 0.1, 1.0, 4, 3).unwrap();
        let s = skinlab::skinfield::metric_skin_transform(&h, 1.0).unwrap();
        let a = Artifact::new("skin", BTreeMap::new(), vec![], crate::artifact::embed(&s.to_json()));
        let csv = emit_plot_data(&a, Some(&h), "radial").unwrap();
        assert!(csv.starts_with("r,a_norm,value,delta\n"));
        assert_eq!(csv.lines().count(), h.vertex_count() + 1);
    }
}
