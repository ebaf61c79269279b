//! Synthetic stand-in for the Covertype table: 10 continuous columns, 4
//! wilderness indicators, 40 soil indicators and a 7-way `Cover_Type` label
//! produced by a fixed random two-layer teacher network. Classes are
//! balanced exactly.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub const LABEL_COLUMN: &str = "Cover_Type";
pub const N_CLASSES: usize = 7;

const CONTINUOUS: [(&str, f64, f64); 10] = [
    ("Elevation", 2959.0, 280.0),
    ("Aspect", 155.0, 112.0),
    ("Slope", 14.0, 7.5),
    ("Horizontal_Distance_To_Hydrology", 269.0, 212.0),
    ("Vertical_Distance_To_Hydrology", 46.0, 58.0),
    ("Horizontal_Distance_To_Roadways", 2350.0, 1559.0),
    ("Hillshade_9am", 212.0, 27.0),
    ("Hillshade_Noon", 223.0, 20.0),
    ("Hillshade_3pm", 143.0, 38.0),
    ("Horizontal_Distance_To_Fire_Points", 1980.0, 1324.0),
];
const WILDERNESS: usize = 4;
const SOIL: usize = 40;
const HIDDEN: usize = 8;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = CONTINUOUS.iter().map(|c| c.0.to_string()).collect();
    h.extend((1..=WILDERNESS).map(|i| format!("Wilderness_Area{i}")));
    h.extend((1..=SOIL).map(|i| format!("Soil_Type{i}")));
    h.push(LABEL_COLUMN.to_string());
    h
}

struct Teacher {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl Teacher {
    fn new(rng: &mut ChaCha8Rng, inputs: usize) -> Self {
        let w1 = (0..HIDDEN)
            .map(|_| {
                (0..inputs)
                    .map(|i| if i < CONTINUOUS.len() { normal(rng) * 0.8 } else { normal(rng) * 0.3 })
                    .collect()
            })
            .collect();
        let b1 = (0..HIDDEN).map(|_| normal(rng) * 0.5).collect();
        let w2 = (0..N_CLASSES)
            .map(|_| (0..HIDDEN).map(|_| normal(rng) * 3.0).collect())
            .collect();
        Self {
            w1,
            b1,
            w2,
            bias: vec![0.0; N_CLASSES],
        }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| (w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b).tanh())
            .collect();
        self.w2
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(&hidden).map(|(a, h)| a * h).sum::<f64>() + b)
            .collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// One latent sample: standardized inputs for the teacher plus the raw row.
fn sample_row(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<String>) {
    let z: Vec<f64> = (0..CONTINUOUS.len()).map(|_| normal(rng)).collect();
    let wild = argmax(&(0..WILDERNESS).map(|k| z[k % 3] * (k as f64 - 1.5) + normal(rng)).collect::<Vec<_>>());
    let soil = argmax(&(0..SOIL).map(|k| z[0] * ((k as f64) / 13.0 - 1.5) + normal(rng) * 0.8).collect::<Vec<_>>());
    let mut teacher_in = z.clone();
    teacher_in.extend((0..WILDERNESS).map(|k| f64::from(u8::from(k == wild))));
    teacher_in.extend((0..SOIL).map(|k| f64::from(u8::from(k == soil)) * 2.0));
    let mut row: Vec<String> = CONTINUOUS
        .iter()
        .zip(&z)
        .map(|((_, mean, sd), v)| format!("{}", (mean + sd * v).round()))
        .collect();
    row.extend((0..WILDERNESS).map(|k| u8::from(k == wild).to_string()));
    row.extend((0..SOIL).map(|k| u8::from(k == soil).to_string()));
    (teacher_in, row)
}

/// `rows` class-balanced rows (labels `1..=7`) as strings, header excluded.
pub fn covertype_like(rows: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = CONTINUOUS.len() + WILDERNESS + SOIL;
    let mut teacher = Teacher::new(&mut rng, inputs);

    // shift the class biases until the teacher's argmax is roughly uniform
    let calibration: Vec<Vec<f64>> = (0..4000).map(|_| teacher.logits(&sample_row(&mut rng).0)).collect();
    for _ in 0..200 {
        let mut counts = [0usize; N_CLASSES];
        for l in &calibration {
            let shifted: Vec<f64> = l.iter().zip(&teacher.bias).map(|(a, b)| a + b).collect();
            counts[argmax(&shifted)] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            let frac = count as f64 / calibration.len() as f64;
            teacher.bias[c] += 0.5 * (1.0 / N_CLASSES as f64 - frac);
        }
    }

    let quota: Vec<usize> = (0..N_CLASSES)
        .map(|c| rows / N_CLASSES + usize::from(c < rows % N_CLASSES))
        .collect();
    let mut filled = [0usize; N_CLASSES];
    let mut out = Vec::with_capacity(rows);
    while out.len() < rows {
        let (x, mut row) = sample_row(&mut rng);
        let class = argmax(&teacher.logits(&x));
        if filled[class] < quota[class] {
            filled[class] += 1;
            row.push((class + 1).to_string());
            out.push(row);
        }
    }
    out
}

pub fn write_covertype_like_csv(path: impl AsRef<Path>, rows: usize, seed: u64) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header().join(","))?;
    for row in covertype_like(rows, seed) {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
