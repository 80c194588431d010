//! Nearest-neighbor lattice gas / Ising companion on the 2-d torus.
//!
//! Everything here uses one internal normalization: the Ising Hamiltonian
//! `H = -J_I sum_edges sigma_x sigma_y - h sum_x sigma_x`,
//! where the edge set is "right + down per site", so every torus edge is
//! counted exactly once (for n = 2 that means doubled bonds between a pair,
//! for n = 1 self-loops; enumeration and dynamics share the convention, so
//! the constants cancel). The lattice-gas dictionary (occupation
//! n_x = (sigma_x + 1)/2, gas bond strength J per edge, chemical potential
//! mu) maps onto it as J_I = J/4 and h = (mu + dJ)/2. The translation lives
//! in `gas_to_ising_coupling`, `mu_to_h` and `h_to_mu`; nothing else mixes
//! the two pictures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cluster::WrapUnionFind;

const DIM: usize = 2;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("exact enumeration supports n <= 4 (2^(n*n) states), got n = {0}")]
    TooLargeForEnumeration(usize),
}

/// Ising spins on the n x n torus with the fixed normalization above.
#[derive(Debug, Clone, Serialize)]
pub struct SpinLattice {
    n: usize,
    /// Row-major spins, each exactly +1 or -1.
    spins: Vec<i8>,
    /// J_I, the coupling per torus edge.
    pub coupling: f64,
    /// External field h.
    pub field: f64,
    pub beta: f64,
}

/// Map a lattice-gas chemical potential to the Ising field.
pub fn mu_to_h(mu: f64, j_gas: f64, d: usize) -> f64 {
    (mu + d as f64 * j_gas) / 2.0
}

/// Inverse of `mu_to_h`.
pub fn h_to_mu(h: f64, j_gas: f64, d: usize) -> f64 {
    2.0 * h - d as f64 * j_gas
}

/// Gas bond strength J (per torus edge) to Ising coupling J_I.
pub fn gas_to_ising_coupling(j_gas: f64) -> f64 {
    j_gas / 4.0
}

/// Occupation picture of a spin state.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeGasView {
    pub n: usize,
    /// n_x = (sigma_x + 1)/2 site by site.
    pub occupation: Vec<u8>,
    /// Chemical potential recovered through the dictionary.
    pub mu: f64,
}

impl SpinLattice {
    /// All spins aligned to `sign` (+1 or -1).
    pub fn uniform(n: usize, coupling: f64, field: f64, beta: f64, sign: i8) -> Self {
        assert!(n >= 1);
        assert!(sign == 1 || sign == -1, "spins are exactly +-1");
        assert!(beta >= 0.0 && beta.is_finite());
        Self {
            n,
            spins: vec![sign; n * n],
            coupling,
            field,
            beta,
        }
    }

    /// Independent fair spins.
    pub fn random(n: usize, coupling: f64, field: f64, beta: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut lat = Self::uniform(n, coupling, field, beta, 1);
        for s in lat.spins.iter_mut() {
            *s = if rng.random::<bool>() { 1 } else { -1 };
        }
        lat
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, row: usize, col: usize) -> i8 {
        self.spins[row * self.n + col]
    }

    fn site(&self, row: usize, col: usize) -> usize {
        (row % self.n) * self.n + (col % self.n)
    }

    /// Mean spin per site.
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / (self.n * self.n) as f64
    }

    /// Fraction of occupied sites in the gas picture.
    pub fn occupied_fraction(&self) -> f64 {
        (self.magnetization() + 1.0) / 2.0
    }

    /// Total energy over the right+down edge set.
    pub fn total_energy(&self) -> f64 {
        let n = self.n;
        let mut bond_sum = 0.0;
        let mut spin_sum = 0.0;
        for r in 0..n {
            for c in 0..n {
                let s = self.spin(r, c) as f64;
                spin_sum += s;
                bond_sum += s * self.spins[self.site(r, c + 1)] as f64;
                bond_sum += s * self.spins[self.site(r + 1, c)] as f64;
            }
        }
        -self.coupling * bond_sum - self.field * spin_sum
    }

    /// Energy change of flipping the spin at (row, col). Directional
    /// neighbors equal to the site itself (n = 1 self-loops) contribute a
    /// constant to H and must not enter the local field.
    pub fn flip_delta(&self, row: usize, col: usize) -> f64 {
        let idx = row * self.n + col;
        let mut field_sum = 0.0;
        for (dr, dc) in [(0, 1), (0, self.n - 1), (1, 0), (self.n - 1, 0)] {
            let nb = self.site(row + dr, col + dc);
            if nb != idx {
                field_sum += self.spins[nb] as f64;
            }
        }
        2.0 * self.spins[idx] as f64 * (self.coupling * field_sum + self.field)
    }

    /// One sweep of n^2 random-site heat-bath updates: flip with
    /// probability 1/(1 + e^{beta dE}).
    pub fn glauber_sweep(&mut self, rng: &mut ChaCha8Rng) {
        let n2 = self.n * self.n;
        for _ in 0..n2 {
            let idx = rng.random_range(0..n2);
            let de = self.flip_delta(idx / self.n, idx % self.n);
            let p_flip = 1.0 / (1.0 + (self.beta * de).exp());
            if rng.random::<f64>() < p_flip {
                self.spins[idx] = -self.spins[idx];
            }
        }
    }

    /// The occupation field with the chemical potential implied by the
    /// dictionary at gas coupling `j_gas`.
    pub fn gas_view(&self, j_gas: f64) -> LatticeGasView {
        LatticeGasView {
            n: self.n,
            occupation: self.spins.iter().map(|&s| ((s + 1) / 2) as u8).collect(),
            mu: h_to_mu(self.field, j_gas, DIM),
        }
    }
}

/// Wrap detection and cluster sizes of an occupied-site field under
/// nearest-neighbor adjacency on the torus.
pub fn site_percolation(n: usize, occupied: &[bool]) -> (bool, Vec<usize>) {
    assert_eq!(occupied.len(), n * n);
    let mut uf = WrapUnionFind::new(n * n, DIM);
    for r in 0..n {
        for c in 0..n {
            if !occupied[r * n + c] {
                continue;
            }
            // Right and down edges, with the winding shift on the seam.
            let right = r * n + (c + 1) % n;
            if occupied[right] {
                let shift = [i32::from(c + 1 == n), 0];
                uf.union(r * n + c, right, &shift);
            }
            let down = ((r + 1) % n) * n + c;
            if occupied[down] {
                let shift = [0, i32::from(r + 1 == n)];
                uf.union(r * n + c, down, &shift);
            }
        }
    }
    let mut sizes: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut wrapped = false;
    for (idx, &occ) in occupied.iter().enumerate() {
        if occ {
            let root = uf.find(idx);
            *sizes.entry(root).or_insert(0) += 1;
            wrapped |= uf.is_wrapped_root(root);
        }
    }
    (wrapped, sizes.into_values().collect())
}

/// Exact Gibbs expectations on lattices small enough to enumerate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactStats {
    /// Mean spin per site.
    pub magnetization: f64,
    /// Mean total energy.
    pub energy: f64,
    /// Probability of a wrapping occupied cluster.
    pub wrap_probability: f64,
    pub occupied_fraction: f64,
}

/// Sum over all 2^{n^2} states. Energies are shifted by their minimum
/// before exponentiation so large beta stays in range.
pub fn exact_enumeration(
    n: usize,
    coupling: f64,
    field: f64,
    beta: f64,
) -> Result<ExactStats, LatticeError> {
    if n > 4 {
        return Err(LatticeError::TooLargeForEnumeration(n));
    }
    let n2 = n * n;
    let states: u64 = 1 << n2;
    let mut lat = SpinLattice::uniform(n, coupling, field, beta, 1);
    let mut energies = Vec::with_capacity(states as usize);
    let mut wraps = Vec::with_capacity(states as usize);
    let mut mags = Vec::with_capacity(states as usize);
    let mut occupied = vec![false; n2];
    for state in 0..states {
        for (i, (sp, occ)) in lat.spins.iter_mut().zip(&mut occupied).enumerate() {
            let up = state >> i & 1 == 1;
            *sp = if up { 1 } else { -1 };
            *occ = up;
        }
        energies.push(lat.total_energy());
        mags.push(lat.magnetization());
        wraps.push(site_percolation(n, &occupied).0);
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut e_acc = 0.0;
    let mut m_acc = 0.0;
    let mut w_acc = 0.0;
    for i in 0..states as usize {
        let w = (-beta * (energies[i] - e_min)).exp();
        z += w;
        e_acc += w * energies[i];
        m_acc += w * mags[i];
        w_acc += w * f64::from(wraps[i]);
    }
    let magnetization = m_acc / z;
    Ok(ExactStats {
        magnetization,
        energy: e_acc / z,
        wrap_probability: w_acc / z,
        occupied_fraction: (magnetization + 1.0) / 2.0,
    })
}

/// One recorded Glauber sample, mirroring the continuum series schema.
#[derive(Debug, Clone, Serialize)]
pub struct IsingRecord {
    pub sweep: u64,
    pub m: f64,
    pub energy: f64,
    pub occupied_fraction: f64,
    pub wrapped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsingSeries {
    pub n: usize,
    pub coupling: f64,
    pub field: f64,
    pub beta: f64,
    pub seed: u64,
    pub records: Vec<IsingRecord>,
}

/// Burn in, then record every `thin` sweeps.
pub fn run_glauber(
    mut lattice: SpinLattice,
    sweeps: u64,
    burn_in: u64,
    thin: u64,
    seed: u64,
) -> IsingSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..burn_in {
        lattice.glauber_sweep(&mut rng);
    }
    let thin = thin.max(1);
    let n2 = lattice.n * lattice.n;
    let mut records = Vec::new();
    let mut occupied = vec![false; n2];
    for s in 0..sweeps {
        lattice.glauber_sweep(&mut rng);
        if s % thin == thin - 1 {
            for (o, &sp) in occupied.iter_mut().zip(&lattice.spins) {
                *o = sp == 1;
            }
            let (wrapped, _) = site_percolation(lattice.n, &occupied);
            records.push(IsingRecord {
                sweep: burn_in + s + 1,
                m: lattice.magnetization(),
                energy: lattice.total_energy(),
                occupied_fraction: lattice.occupied_fraction(),
                wrapped,
            });
        }
    }
    IsingSeries {
        n: lattice.n,
        coupling: lattice.coupling,
        field: lattice.field,
        beta: lattice.beta,
        seed,
        records,
    }
}
