//! Synthetic datasets: master fingers, noisy transformed impressions and
//! optional descriptors that follow their minutiae.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use fvault_core::descriptor::Descriptor;
use fvault_core::minutiae::{
    synthesize_finger, synthesize_traced_impression, ImpressionNoise, MinutiaeTemplate, RigidTransform,
};

use crate::derive_seed;
use crate::format::{Dataset, Impression};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub fingers: usize,
    pub impressions: usize,
    pub width: u32,
    pub height: u32,
    pub minutiae: usize,
    pub min_separation: f64,
    pub pos_noise: f64,
    pub ang_noise: f64,
    pub drop_rate: f64,
    pub spurious: usize,
    /// Impressions are rotated uniformly within `±max_rotation` degrees
    /// about the image center and shifted within `±max_shift` pixels.
    pub max_rotation: f64,
    pub max_shift: f64,
    /// Descriptor bit length; no descriptors when `None`.
    pub descriptor_bits: Option<usize>,
    /// Bits flipped in each impression's copy of a master descriptor.
    pub descriptor_flips: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fingers: 10,
            impressions: 8,
            width: 296,
            height: 560,
            minutiae: 40,
            min_separation: 30.0,
            pos_noise: 4.0,
            ang_noise: 8.0,
            drop_rate: 0.2,
            spurious: 4,
            max_rotation: 10.0,
            max_shift: 20.0,
            descriptor_bits: None,
            descriptor_flips: 0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Every impression equals its master exactly.
    pub fn zero_noise(fingers: usize, impressions: usize, seed: u64) -> Self {
        Self {
            fingers,
            impressions,
            pos_noise: 0.0,
            ang_noise: 0.0,
            drop_rate: 0.0,
            spurious: 0,
            max_rotation: 0.0,
            max_shift: 0.0,
            seed,
            ..Self::default()
        }
    }

    fn noise(&self) -> ImpressionNoise {
        ImpressionNoise {
            pos_noise: self.pos_noise,
            ang_noise: self.ang_noise,
            drop_rate: self.drop_rate,
            spurious_count: self.spurious,
            quality_noise: if self.pos_noise == 0.0 && self.ang_noise == 0.0 {
                0.0
            } else {
                ImpressionNoise::default().quality_noise
            },
        }
    }
}

pub fn master_finger(cfg: &SynthConfig, finger: usize) -> fvault_core::Result<MinutiaeTemplate> {
    synthesize_finger(
        derive_seed(&[cfg.seed, 0x6d61_7374, finger as u64]),
        cfg.minutiae,
        cfg.width,
        cfg.height,
        cfg.min_separation,
    )
}

fn random_transform(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> RigidTransform {
    let mut draw = |r: f64| if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 };
    let rotation = draw(cfg.max_rotation);
    let (dx, dy) = (draw(cfg.max_shift), draw(cfg.max_shift));
    RigidTransform::new(dx, dy, rotation, (cfg.width as f64 / 2.0, cfg.height as f64 / 2.0))
}

/// Deterministic in the whole config, seed included.
pub fn synthesize_dataset(cfg: &SynthConfig) -> fvault_core::Result<Dataset> {
    let noise = cfg.noise();
    let mut data = Dataset::default();
    for f in 0..cfg.fingers {
        let master = master_finger(cfg, f)?;
        let mut drng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, 0x6465_7363, f as u64]));
        let master_desc: Vec<Descriptor> = match cfg.descriptor_bits {
            Some(len) => (0..master.len()).map(|_| Descriptor::random(&mut drng, len)).collect(),
            None => Vec::new(),
        };
        let mut finger = Vec::with_capacity(cfg.impressions);
        for i in 0..cfg.impressions {
            let s = derive_seed(&[cfg.seed, f as u64, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let transform = random_transform(cfg, &mut rng);
            let traced = synthesize_traced_impression(&master, rng.gen(), &noise, &transform)?;
            let descriptors = cfg.descriptor_bits.map(|len| {
                traced
                    .origin
                    .iter()
                    .map(|o| match o {
                        Some(mi) => master_desc[*mi].perturbed(&mut rng, cfg.descriptor_flips),
                        None => Descriptor::random(&mut rng, len),
                    })
                    .collect()
            });
            finger.push(Impression {
                template: traced.template,
                transform,
                descriptors,
            });
        }
        data.fingers.push(finger);
    }
    Ok(data)
}
