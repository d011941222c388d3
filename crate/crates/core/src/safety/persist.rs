use super::model::{ModelParameters, EMBED_DIM, HIDDEN, VIEW_DIM};
use super::SafetyError;
use crate::Scalar;

pub const MODEL_MAGIC: &str = "safe-planner-model v1";

fn array_names() -> [&'static str; 6] {
    ["encoder", "w_in", "w_rec", "bias", "head_w", "head_b"]
}

/// Versioned text format: magic line, skills, dimensions, then each array as
/// `name len` followed by one line of values. Values print in shortest
/// round-trip form, so a save/load cycle is exact.
pub fn render_model<T: Scalar>(p: &ModelParameters<T>) -> String {
    let mut s = format!(
        "{MODEL_MAGIC}\nskills {}\ndims view={VIEW_DIM} embed={EMBED_DIM} hidden={HIDDEN} heads={}\n",
        p.skills.join(","),
        p.heads()
    );
    let arrays: [&[T]; 6] = [&p.encoder, &p.w_in, &p.w_rec, &p.bias, &p.head_w, &p.head_b];
    for (name, a) in array_names().iter().zip(arrays) {
        s.push_str(&format!("{name} {}\n", a.len()));
        let vals: Vec<String> = a.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&vals.join(" "));
        s.push('\n');
    }
    s
}

fn bad(line: usize, msg: impl Into<String>) -> SafetyError {
    SafetyError::ModelFormat {
        line,
        msg: msg.into(),
    }
}

pub fn parse_model<T: Scalar>(text: &str) -> Result<ModelParameters<T>, SafetyError> {
    let lines: Vec<&str> = text.lines().collect();
    let get = |i: usize| {
        lines
            .get(i)
            .copied()
            .ok_or_else(|| bad(i + 1, "unexpected end of file"))
    };
    if get(0)?.trim() != MODEL_MAGIC {
        return Err(bad(1, format!("expected `{MODEL_MAGIC}`")));
    }
    let skills: Vec<String> = get(1)?
        .strip_prefix("skills ")
        .ok_or_else(|| bad(2, "expected skills line"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let i = skills.len();
    let expected_dims = format!("dims view={VIEW_DIM} embed={EMBED_DIM} hidden={HIDDEN} heads={i}");
    if get(2)?.trim() != expected_dims {
        return Err(bad(
            3,
            format!("dimension mismatch, expected `{expected_dims}`"),
        ));
    }
    let sizes = [
        EMBED_DIM * VIEW_DIM,
        HIDDEN * EMBED_DIM,
        HIDDEN * HIDDEN,
        HIDDEN,
        i * HIDDEN,
        i,
    ];
    let mut arrays: Vec<Vec<T>> = Vec::new();
    for (k, (name, size)) in array_names().iter().zip(sizes).enumerate() {
        let hl = 3 + 2 * k;
        let header = get(hl)?;
        if header.trim() != format!("{name} {size}") {
            return Err(bad(hl + 1, format!("expected `{name} {size}`")));
        }
        let vals = get(hl + 1)?
            .split_whitespace()
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| bad(hl + 2, format!("bad value {v}")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if vals.len() != size {
            return Err(bad(
                hl + 2,
                format!("{name}: expected {size} values, found {}", vals.len()),
            ));
        }
        arrays.push(vals);
    }
    let mut it = arrays.into_iter();
    let mut next = || it.next().unwrap();
    Ok(ModelParameters {
        skills,
        encoder: next(),
        w_in: next(),
        w_rec: next(),
        bias: next(),
        head_w: next(),
        head_b: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::HeadInit;

    #[test]
    fn round_trip_is_exact() {
        let skills = vec!["pick".to_string(), "place".to_string()];
        let p = ModelParameters::<f64>::new(&skills, 11, HeadInit::Random(0.2));
        let back: ModelParameters<f64> = parse_model(&render_model(&p)).unwrap();
        assert_eq!(back, p);
        let p32 = ModelParameters::<f32>::new(&skills, 11, HeadInit::Random(0.2));
        assert_eq!(parse_model::<f32>(&render_model(&p32)).unwrap(), p32);
    }

    #[test]
    fn loader_validates() {
        let skills = vec!["pick".to_string()];
        let text = render_model(&ModelParameters::<f64>::new(&skills, 1, HeadInit::Zero));
        assert!(matches!(
            parse_model::<f64>("nope"),
            Err(SafetyError::ModelFormat { line: 1, .. })
        ));
        let wrong_dims = text.replace("hidden=64", "hidden=32");
        assert!(matches!(
            parse_model::<f64>(&wrong_dims),
            Err(SafetyError::ModelFormat { line: 3, .. })
        ));
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(parse_model::<f64>(&truncated).is_err());
    }
}
