//! Render + sensing context shared by calibration and the experiments.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::designs::{design_raw_output, PsogDesign};
use crate::error::{Error, Result};
use crate::eye_render::{
    render_eye_image, CameraConfig, EyeImage, EyeModelConfig, EyeState, ImageGeometry,
    LightingConfig,
};
use crate::sensing::{Footprint, SignalChain};

/// Quantisation steps applied to every rendered state.
pub const ANGLE_QUANTUM_DEG: f64 = 0.01;
pub const PUPIL_QUANTUM_MM: f64 = 0.05;

/// Quantised eye state used as render-cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    yaw: i64,
    pitch: i64,
    pupil: i64,
}

impl StateKey {
    pub fn from_state(state: &EyeState) -> Self {
        Self {
            yaw: (state.yaw / ANGLE_QUANTUM_DEG).round() as i64,
            pitch: (state.pitch / ANGLE_QUANTUM_DEG).round() as i64,
            pupil: (state.pupil_diameter / PUPIL_QUANTUM_MM).round() as i64,
        }
    }

    pub fn state(&self) -> EyeState {
        // Divide by the reciprocal so grid values such as 10° come out exact.
        EyeState::new(
            self.yaw as f64 / (1.0 / ANGLE_QUANTUM_DEG).round(),
            self.pitch as f64 / (1.0 / ANGLE_QUANTUM_DEG).round(),
            self.pupil as f64 / (1.0 / PUPIL_QUANTUM_MM).round(),
        )
    }
}

pub struct Scene {
    pub model: EyeModelConfig,
    pub camera: CameraConfig,
    pub lighting: LightingConfig,
    pub chain: SignalChain,
    cache: Option<Mutex<HashMap<StateKey, Arc<EyeImage>>>>,
}

impl Scene {
    pub fn new(
        model: EyeModelConfig,
        camera: CameraConfig,
        lighting: LightingConfig,
    ) -> Result<Self> {
        model.validate()?;
        camera.validate()?;
        lighting.validate()?;
        Ok(Self {
            model,
            camera,
            lighting,
            chain: SignalChain::default(),
            cache: Some(Mutex::new(HashMap::new())),
        })
    }

    pub fn with_chain(mut self, chain: SignalChain) -> Result<Self> {
        chain.validate()?;
        self.chain = chain;
        Ok(self)
    }

    /// Enables or disables render memoisation. Output is identical either way.
    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache = enabled.then(|| Mutex::new(HashMap::new()));
        self
    }

    /// Same scene seen through a shifted sensor frame (fresh cache).
    pub fn shifted(&self, shift_x: f64, shift_y: f64) -> Result<Self> {
        let camera = self.camera.with_shift(shift_x, shift_y);
        camera.validate()?;
        Ok(Self {
            model: self.model.clone(),
            camera,
            lighting: self.lighting.clone(),
            chain: self.chain.clone(),
            cache: self.cache.as_ref().map(|_| Mutex::new(HashMap::new())),
        })
    }

    pub fn geometry(&self) -> ImageGeometry {
        ImageGeometry::from_camera(&self.camera)
    }

    /// Renders the quantised version of `state`.
    pub fn render(&self, state: &EyeState) -> Result<Arc<EyeImage>> {
        self.render_key(StateKey::from_state(state))
    }

    pub fn render_key(&self, key: StateKey) -> Result<Arc<EyeImage>> {
        let Some(cache) = &self.cache else {
            return self.render_uncached(key);
        };
        if let Some(hit) = cache.lock().expect("render cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let image = self.render_uncached(key)?;
        let mut guard = cache.lock().expect("render cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(image)))
    }

    fn render_uncached(&self, key: StateKey) -> Result<Arc<EyeImage>> {
        render_eye_image(&self.model, &self.camera, &key.state(), &self.lighting).map(Arc::new)
    }

    /// Renders all missing keys in parallel so later lookups are cache hits.
    pub fn prefetch(&self, keys: &[StateKey]) -> Result<()> {
        let Some(cache) = &self.cache else {
            return Ok(());
        };
        let missing: Vec<StateKey> = {
            let guard = cache.lock().expect("render cache poisoned");
            let mut keys: Vec<StateKey> = keys
                .iter()
                .copied()
                .filter(|k| !guard.contains_key(k))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            keys
        };
        let rendered: Vec<(StateKey, Arc<EyeImage>)> = missing
            .par_iter()
            .map(|&k| self.render_uncached(k).map(|img| (k, img)))
            .collect::<Result<_>>()?;
        let mut guard = cache.lock().expect("render cache poisoned");
        for (k, img) in rendered {
            guard.entry(k).or_insert(img);
        }
        Ok(())
    }

    pub fn cached_images(&self) -> usize {
        self.cache
            .as_ref()
            .map_or(0, |c| c.lock().expect("render cache poisoned").len())
    }

    /// Precomputes the footprints of `design` on this scene's image grid.
    pub fn compile(&self, design: &PsogDesign) -> Result<CompiledDesign> {
        let geometry = self.geometry();
        let footprints = design
            .areas
            .iter()
            .map(|a| Footprint::build(&geometry, a, self.model.supersampling_factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledDesign {
            design: design.clone(),
            footprints,
        })
    }
}

/// A design bound to one image geometry.
#[derive(Debug, Clone)]
pub struct CompiledDesign {
    pub design: PsogDesign,
    footprints: Vec<Footprint>,
}

impl CompiledDesign {
    pub fn sensor_values(&self, image: &EyeImage) -> Vec<f64> {
        self.footprints.iter().map(|f| f.apply(image)).collect()
    }

    /// Noise-free (h_raw, v_raw) after the deterministic part of `chain`.
    pub fn raw_output(&self, image: &EyeImage, chain: &SignalChain) -> (f64, f64) {
        let values: Vec<f64> = self
            .sensor_values(image)
            .into_iter()
            .map(|v| chain.convert(v))
            .collect();
        design_raw_output(&self.design, &values).expect("footprints match design areas")
    }

    pub fn len(&self) -> usize {
        self.footprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.footprints.is_empty()
    }
}

pub(crate) fn require_unshifted(scene: &Scene) -> Result<()> {
    if scene.camera.is_shifted() {
        return Err(Error::Contract(
            "calibration must run with the sensor frame at zero shift".into(),
        ));
    }
    Ok(())
}
