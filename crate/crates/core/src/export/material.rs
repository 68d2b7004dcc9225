use std::collections::BTreeMap;

use serde::Serialize;

use super::ExportError;
use crate::rng::SeededStream;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MaterialParams {
    pub base_color: [f64; 3],
    pub roughness: f64,
    pub specular: f64,
    pub noise_amplitude: f64,
}

/// One palette entry: a range per material parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialRange {
    pub name: String,
    pub color_lo: [f64; 3],
    pub color_hi: [f64; 3],
    pub roughness: (f64, f64),
    pub specular: (f64, f64),
    pub noise: (f64, f64),
}

impl MaterialRange {
    /// Range that always yields `params`.
    pub fn fixed(name: impl Into<String>, params: &MaterialParams) -> Self {
        Self {
            name: name.into(),
            color_lo: params.base_color,
            color_hi: params.base_color,
            roughness: (params.roughness, params.roughness),
            specular: (params.specular, params.specular),
            noise: (params.noise_amplitude, params.noise_amplitude),
        }
    }

    pub fn is_valid(&self) -> bool {
        let unit = |(lo, hi): (f64, f64)| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi;
        (0..3).all(|i| unit((self.color_lo[i], self.color_hi[i])))
            && unit(self.roughness)
            && unit(self.specular)
            && unit(self.noise)
    }
}

/// Picks a palette entry, then draws every parameter uniformly in its range.
/// The base color is jittered per channel by up to the drawn noise amplitude
/// and clamped to `[0, 1]`. Draw order: entry, color (r, g, b), roughness,
/// specular, noise, jitter (r, g, b).
pub fn sample_material(rng: &mut SeededStream, palette: &[MaterialRange]) -> Result<MaterialParams, ExportError> {
    if palette.is_empty() {
        return Err(ExportError::EmptyPalette);
    }
    let entry = &palette[rng.index(palette.len())];
    let mut color = [0.0; 3];
    for (i, c) in color.iter_mut().enumerate() {
        *c = rng.uniform(entry.color_lo[i], entry.color_hi[i]);
    }
    let roughness = rng.uniform(entry.roughness.0, entry.roughness.1);
    let specular = rng.uniform(entry.specular.0, entry.specular.1);
    let noise = rng.uniform(entry.noise.0, entry.noise.1);
    for c in &mut color {
        let jitter = rng.uniform(-1.0, 1.0);
        if noise > 0.0 {
            *c = (*c + noise * jitter).clamp(0.0, 1.0);
        }
    }
    Ok(MaterialParams {
        base_color: color,
        roughness,
        specular,
        noise_amplitude: noise,
    })
}

/// Reads a material library written by [`mtl_string`](super::mtl_string).
/// Specular comes from the first `Ks` channel; the noise amplitude from the
/// `# noise` comment, zero when absent.
pub fn parse_mtl(text: &str) -> Result<BTreeMap<String, MaterialParams>, ExportError> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, MaterialParams)> = None;
    for (ln, raw) in text.lines().enumerate() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&key) = tokens.first() else { continue };
        let first = |skip: usize| -> Result<f64, ExportError> {
            tokens
                .get(skip)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| ExportError::InvalidUrdf(format!("material library line {}: `{raw}`", ln + 1)))
        };
        if key == "newmtl" {
            out.extend(current.take());
            current = Some((tokens.get(1).unwrap_or(&"").to_string(), MaterialParams::default()));
            continue;
        }
        let Some((_, m)) = current.as_mut() else { continue };
        match (key, tokens.get(1).copied()) {
            ("Kd", _) => m.base_color = [first(1)?, first(2)?, first(3)?],
            ("Ks", _) => m.specular = first(1)?,
            ("Pr", _) => m.roughness = first(1)?,
            ("#", Some("noise")) => m.noise_amplitude = first(2)?,
            _ => {}
        }
    }
    out.extend(current);
    Ok(out)
}
