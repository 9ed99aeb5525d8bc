//! Deterministic splittable random number streams.
//!
//! Every stream is keyed by a `(seed, stream_id)` pair; the same pair always
//! reproduces the same draw sequence, and distinct stream ids give
//! independent-quality streams. Replicates therefore never share a stream,
//! which keeps parallel runs reproducible regardless of scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A SplitMix64-style counter generator over a per-stream key.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    state: u64,
    cached_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix(mix(seed ^ GOLDEN) ^ mix(stream_id.wrapping_mul(0xD605_BBB5_8C8A_BC15)));
        RngStream {
            seed,
            stream_id,
            state: key,
            cached_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A stream derived from this one's identity; `RngStream::new(seed, id)`
    /// with an id formed from (stream_id, child). Children of distinct
    /// parents never collide because the parent id is mixed in.
    pub fn child(&self, child: u64) -> RngStream {
        RngStream::new(
            self.seed,
            mix(self.stream_id.wrapping_mul(GOLDEN) ^ child.wrapping_add(1)),
        )
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1); safe to pass through logs and
    /// quantile functions.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Standard exponential.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Standard Laplace (location 0, scale 1).
    pub fn laplace(&mut self) -> f64 {
        let u = self.uniform_open();
        if u < 0.5 {
            (2.0 * u).ln()
        } else {
            -(2.0 * (1.0 - u)).ln()
        }
    }

    /// Gamma(shape, scale 1) via Marsaglia-Tsang, with the standard boost
    /// for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.uniform_open();
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v3 = v * v * v;
            let u = self.uniform_open();
            if u.ln() < 0.5 * x * x + d - d * v3 + d * v3.ln() {
                return d * v3;
            }
        }
    }

    /// Chi-squared with (possibly fractional) degrees of freedom.
    pub fn chi_squared(&mut self, dof: f64) -> f64 {
        2.0 * self.gamma(0.5 * dof)
    }
}
