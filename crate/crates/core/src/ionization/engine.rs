use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    ai_prefactor, angular_weight, pi_prefactor, CrossSectionTable, ExitState, IonizationCoupling, IonizationSettings,
    SMatrixElement, SelectionRules, TableRow,
};
use crate::potentials::{EntranceChannel, Parity, ReactionSystem};
use crate::radial::{
    bound_states, bound_step, lattice_step, propagate_on, simpson, BoundState, LatticePotential, RadialGrid,
};
use crate::{Error, Result};

/// `V_εℓ` below this fraction of its peak is left out of overlap integrals.
/// Cold entrance waves are many orders larger outside the well than inside
/// it, so the tail matters long after the coupling itself looks negligible.
const COUPLING_CUTOFF: f64 = 1e-16;

/// Allowed `J*` solved together before the convergence test.
const BLOCK: usize = 3;

/// Bookkeeping for one entrance partial wave.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialWave {
    pub j_star: u32,
    /// Entrance absorption `1 - |e^{2iδ}|²`.
    pub absorption: f64,
    /// `Σ_{ℓ,J₊} w ∫|S_PI|² dE₊`.
    pub pi_probability: f64,
    /// `Σ_{ℓ,J₊} w Σ_v |S_AI|²`.
    pub ai_probability: f64,
    /// Exit probability over absorption; `None` when nothing is absorbed.
    pub flux_ratio: Option<f64>,
}

/// `σ_S^AI` and `σ_S^PI` (bohr²) at one collision energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSigma {
    pub spin: u8,
    pub energy: f64,
    pub sigma_ai: f64,
    pub sigma_pi: f64,
    pub partial_waves: Vec<PartialWave>,
}

struct EntranceWave {
    j: u32,
    phase: Complex64,
    first: usize,
    values: Vec<Complex64>,
}

/// Lattice layout for one collision energy: every solve uses a step
/// `grid.step / 2^n`, so all of them nest in the finest one.
struct Plan {
    h: f64,
    grid: RadialGrid,
    /// `(E₊, weight)` of the `∫ dE₊` quadrature.
    nodes: Vec<(f64, f64)>,
}

fn level(grid: &RadialGrid, h: f64) -> usize {
    (grid.step / h).log2().round() as usize
}

fn index(p: Parity) -> usize {
    match p {
        Parity::Gerade => 0,
        Parity::Ungerade => 1,
    }
}

fn min_on(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 4000;
    (0..=n).map(|i| f(a + (b - a) * i as f64 / n as f64)).fold(0.0f64, f64::min)
}

/// `∫ ψ_f V ψ_d dR` on the exit lattice; `stride` is the ratio of the exit
/// step to the entrance step.
fn overlap(ent: &EntranceWave, vc: &[f64], stride: usize, first: usize, vals: &[f64], h_f: f64) -> Complex64 {
    let ent_end = (ent.first + ent.values.len()).min(vc.len());
    let lo = first.max(ent.first.div_ceil(stride));
    let hi = (first + vals.len()).min(ent_end.div_ceil(stride));
    if hi < lo + 3 {
        return Complex64::new(0.0, 0.0);
    }
    let g: Vec<Complex64> = (lo..hi)
        .map(|i| ent.values[i * stride - ent.first] * (vals[i - first] * vc[i * stride]))
        .collect();
    simpson(&g, h_f)
}

/// Cross-section engine for one system and one set of numerical controls.
/// Bound ion levels are cached across energies.
pub struct Ionizer<'a> {
    system: &'a ReactionSystem,
    settings: IonizationSettings,
    coupling: IonizationCoupling,
    gauss: Vec<(f64, f64)>,
    /// Radius beyond which `V_εℓ` is negligible, per entrance spin.
    reach: [Option<f64>; 3],
    bound: Mutex<BTreeMap<(usize, u32), Arc<Vec<BoundState>>>>,
}

impl<'a> Ionizer<'a> {
    pub fn new(system: &'a ReactionSystem, settings: IonizationSettings) -> Result<Self> {
        settings.validate()?;
        let coupling = IonizationCoupling::new(settings.ell_max);
        let rule = GaussLegendre::new(NonZeroUsize::new(settings.quadrature_order).expect("validated"));
        let gauss = rule.nodes().copied().zip(rule.weights().copied()).collect();
        let mut reach = [None; 3];
        for ch in system.entrance_channels() {
            reach[ch.spin() as usize] = coupling_reach(ch, &coupling);
        }
        Ok(Self {
            system,
            settings,
            coupling,
            gauss,
            reach,
            bound: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn settings(&self) -> &IonizationSettings {
        &self.settings
    }

    pub fn system(&self) -> &ReactionSystem {
        self.system
    }

    fn mu(&self) -> f64 {
        self.system.reduced_mass
    }

    fn entrance(&self, spin: u8) -> Result<&EntranceChannel> {
        if spin > 1 {
            return Err(Error::Domain(format!("only S = 0 and S = 1 ionize, got S = {spin}")));
        }
        self.system
            .entrance(spin)
            .ok_or_else(|| Error::Domain(format!("no entrance channel S = {spin}")))
    }

    fn check_energy(e_star: f64) -> Result<()> {
        if !(e_star > 0.0 && e_star.is_finite()) {
            return Err(Error::Domain(format!("collision energy must be positive, got {e_star}")));
        }
        Ok(())
    }

    /// Bound levels of exit channel `p` at rotation `J₊`.
    pub fn exit_levels(&self, p: Parity, j_plus: u32) -> Arc<Vec<BoundState>> {
        let key = (index(p), j_plus);
        if let Some(v) = self.bound.lock().expect("cache lock").get(&key) {
            return v.clone();
        }
        let exit = self.system.exit(p);
        let f = |r: f64| exit.eval(r);
        let levels = Arc::new(bound_states(&f, j_plus, self.mu(), &self.settings.grid));
        self.bound.lock().expect("cache lock").entry(key).or_insert(levels).clone()
    }

    fn fine_grid(&self, spin: u8) -> RadialGrid {
        let mut grid = self.settings.grid;
        if let Some(r) = self.reach[spin as usize] {
            grid.fine_end = grid.fine_end.max(r);
        }
        grid
    }

    fn exit_v_min(&self, p: Parity, grid: &RadialGrid) -> f64 {
        let exit = self.system.exit(p);
        min_on(&|r| exit.eval(r), grid.r_start, grid.fine_end)
    }

    fn exit_step(&self, grid: &RadialGrid, v_min: f64, e_plus: f64) -> f64 {
        lattice_step(grid, (2.0 * self.mu() * (e_plus - v_min).max(0.0)).sqrt())
    }

    fn entrance_step(&self, ch: &EntranceChannel, grid: &RadialGrid, e_star: f64) -> f64 {
        let v_min = min_on(&|r| ch.potential().eval(r), grid.r_start, grid.fine_end);
        lattice_step(grid, (2.0 * self.mu() * (e_star - v_min).max(0.0)).sqrt())
    }

    fn plan(&self, spin: u8, e_star: f64) -> Result<Plan> {
        let ch = self.entrance(spin)?;
        let grid = self.fine_grid(spin);
        let e_max = self.system.constants.exit_energy_max(e_star);
        let mut h = self.entrance_step(ch, &grid, e_star);
        for exit in self.system.exit_channels() {
            let v_min = self.exit_v_min(exit.parity(), &grid);
            h = h.min(self.exit_step(&grid, v_min, e_max));
            let f = |r: f64| exit.eval(r);
            h = h.min(bound_step(&f, self.mu(), &self.settings.grid));
        }
        let x_max = e_max.sqrt();
        let panels = self.settings.quadrature_panels;
        let mut nodes = Vec::with_capacity(panels * self.gauss.len());
        for k in 0..panels {
            let hi = x_max * 0.5f64.powi(k as i32);
            let lo = if k + 1 == panels { 0.0 } else { 0.5 * hi };
            for &(t, w) in &self.gauss {
                let x = lo + 0.5 * (hi - lo) * (t + 1.0);
                // dE₊ = 2x dx
                nodes.push((x * x, 2.0 * x * w * 0.5 * (hi - lo)));
            }
        }
        Ok(Plan { h, grid, nodes })
    }

    fn coupling_on(&self, ch: &EntranceChannel, h: f64, reach: f64) -> Vec<f64> {
        let n = (reach / h).ceil() as usize + 1;
        (0..n).map(|i| self.coupling.value(ch.width().eval(i as f64 * h))).collect()
    }

    fn entrance_wave(
        &self,
        lattice: &LatticePotential<Complex64>,
        grid: &RadialGrid,
        e_star: f64,
        j: u32,
        n_cut: usize,
    ) -> Result<EntranceWave> {
        let sol = propagate_on(lattice, e_star, j, self.mu(), grid)?;
        let (first, vals) = sol.fine_values();
        let keep = n_cut.saturating_sub(first).min(vals.len());
        Ok(EntranceWave {
            j,
            phase: sol.phase,
            first,
            values: vals[..keep].to_vec(),
        })
    }

    /// Penning S-matrix element for exit kinetic energy `E₊` (hartree).
    #[allow(clippy::too_many_arguments)]
    pub fn s_matrix_pi(
        &self,
        spin: u8,
        exit_parity: Parity,
        j_star: u32,
        j_plus: u32,
        ell: u32,
        e_star: f64,
        e_plus: f64,
    ) -> Result<SMatrixElement> {
        Self::check_energy(e_star)?;
        let ch = self.entrance(spin)?;
        let e_max = self.system.constants.exit_energy_max(e_star);
        if !(e_plus > 0.0 && e_plus <= e_max) {
            return Err(Error::Domain(format!("exit energy {e_plus} outside (0, {e_max}]")));
        }
        let mut element = SMatrixElement {
            spin,
            j_star,
            j_plus,
            ell,
            exit_parity,
            exit: ExitState::Continuum { energy: e_plus },
            electron_energy: e_max - e_plus,
            value: Complex64::new(0.0, 0.0),
            forbidden: SelectionRules::check(ch.parity(), exit_parity, j_star, j_plus, ell),
        };
        let Some(reach) = self.reach[spin as usize] else {
            return Ok(element);
        };
        if element.forbidden.is_some() {
            return Ok(element);
        }
        let grid = self.fine_grid(spin);
        let exit = self.system.exit(exit_parity);
        let h_f = self.exit_step(&grid, self.exit_v_min(exit_parity, &grid), e_plus);
        let h = self.entrance_step(ch, &grid, e_star).min(h_f);
        let fe = |r: f64| ch.eval(r);
        let ent_lattice = LatticePotential::new(&fe, h, grid.fine_end);
        let vc = self.coupling_on(ch, h, reach);
        let ent = self.entrance_wave(&ent_lattice, &grid, e_star, j_star, vc.len())?;
        let fx = |r: f64| exit.eval(r);
        let exit_lattice = LatticePotential::new(&fx, h_f, grid.fine_end);
        let sol = propagate_on(&exit_lattice, e_plus, j_plus, self.mu(), &grid)?;
        let (first, vals) = sol.fine_values();
        let stride = (h_f / h).round() as usize;
        let m = overlap(&ent, &vc, stride, first, vals, h_f);
        let i = Complex64::i();
        element.value = -2.0 * i * pi_prefactor(self.mu()) * (i * (ent.phase + sol.phase)).exp() * m;
        Ok(element)
    }

    /// Associative S-matrix element into bound level `v` of rotation `J₊`.
    #[allow(clippy::too_many_arguments)]
    pub fn s_matrix_ai(
        &self,
        spin: u8,
        exit_parity: Parity,
        j_star: u32,
        j_plus: u32,
        ell: u32,
        e_star: f64,
        v: usize,
    ) -> Result<SMatrixElement> {
        Self::check_energy(e_star)?;
        let ch = self.entrance(spin)?;
        let levels = self.exit_levels(exit_parity, j_plus);
        let level = levels.get(v).ok_or_else(|| {
            Error::Domain(format!("exit {exit_parity} has no bound level v = {v} at J₊ = {j_plus}"))
        })?;
        let e_max = self.system.constants.exit_energy_max(e_star);
        let mut element = SMatrixElement {
            spin,
            j_star,
            j_plus,
            ell,
            exit_parity,
            exit: ExitState::Bound { v, energy: level.energy },
            electron_energy: e_max - level.energy,
            value: Complex64::new(0.0, 0.0),
            forbidden: SelectionRules::check(ch.parity(), exit_parity, j_star, j_plus, ell),
        };
        let Some(reach) = self.reach[spin as usize] else {
            return Ok(element);
        };
        if element.forbidden.is_some() {
            return Ok(element);
        }
        let grid = self.fine_grid(spin);
        let h = self.entrance_step(ch, &grid, e_star).min(level.step);
        let fe = |r: f64| ch.eval(r);
        let ent_lattice = LatticePotential::new(&fe, h, grid.fine_end);
        let vc = self.coupling_on(ch, h, reach);
        let ent = self.entrance_wave(&ent_lattice, &grid, e_star, j_star, vc.len())?;
        let stride = (level.step / h).round() as usize;
        let m = overlap(&ent, &vc, stride, level.first_index, &level.values, level.step);
        let i = Complex64::i();
        element.value = -2.0 * i * ai_prefactor(self.mu()) * (i * ent.phase).exp() * m;
        Ok(element)
    }

    /// `σ_S^AI` and `σ_S^PI` at collision energy `E*` for `S ∈ {0, 1}`.
    pub fn sigma(&self, spin: u8, e_star: f64) -> Result<ChannelSigma> {
        Self::check_energy(e_star)?;
        let ch = self.entrance(spin)?;
        let mut out = ChannelSigma {
            spin,
            energy: e_star,
            sigma_ai: 0.0,
            sigma_pi: 0.0,
            partial_waves: Vec::new(),
        };
        let Some(reach) = self.reach[spin as usize] else {
            return Ok(out);
        };
        let mu = self.mu();
        let plan = self.plan(spin, e_star)?;
        let grid = plan.grid;
        let h = plan.h;
        let vc = self.coupling_on(ch, h, reach);

        let fe = |r: f64| ch.eval(r);
        let ent_lattice = LatticePotential::new(&fe, h, grid.fine_end);
        let exit_fns: Vec<_> = Parity::BOTH
            .iter()
            .map(|&p| {
                let exit = self.system.exit(p);
                move |r: f64| exit.eval(r)
            })
            .collect();
        let top = level(&grid, h);
        let exit_lattices: Vec<Vec<LatticePotential<f64>>> = exit_fns
            .iter()
            .map(|f| {
                (0..=top)
                    .map(|n| LatticePotential::new(f, grid.step * 0.5f64.powi(n as i32), grid.fine_end))
                    .collect()
            })
            .collect();
        let v_min: Vec<f64> = Parity::BOTH.iter().map(|&p| self.exit_v_min(p, &grid)).collect();
        let pi2 = 4.0 * pi_prefactor(mu).powi(2);
        let ai2 = 4.0 * ai_prefactor(mu).powi(2);

        let mut total = 0.0;
        let mut quiet = 0;
        let mut next_j = if SelectionRules::entrance_allows(ch.parity(), 0) { 0 } else { 1 };
        loop {
            let block: Vec<u32> = (0..BLOCK)
                .map(|n| next_j + 2 * n as u32)
                .filter(|&j| j <= self.settings.j_star_max)
                .collect();
            if block.is_empty() {
                let last = out.partial_waves.last();
                return Err(Error::PartialWaveSum {
                    energy: e_star,
                    spin,
                    last_j: last.map_or(0, |w| w.j_star),
                    increment: last.map_or(f64::NAN, |w| (w.pi_probability + w.ai_probability) / total),
                });
            }
            next_j = block[block.len() - 1] + 2;

            let waves: Vec<EntranceWave> = block
                .par_iter()
                .map(|&j| self.entrance_wave(&ent_lattice, &grid, e_star, j, vc.len()))
                .collect::<Result<_>>()?;

            // exit partial waves reached from this block, with the summed
            // angular weight per entrance wave
            let mut links: BTreeMap<(usize, u32), Vec<(usize, f64)>> = BTreeMap::new();
            for (n, w) in waves.iter().enumerate() {
                for &p in &Parity::BOTH {
                    for ell in 0..=self.settings.ell_max {
                        let lo = w.j.abs_diff(ell);
                        for jp in lo..=w.j + ell {
                            if SelectionRules::allows(ch.parity(), p, w.j, jp, ell) {
                                let wt = angular_weight(w.j, jp, ell)?;
                                let list = links.entry((index(p), jp)).or_default();
                                match list.iter_mut().find(|(m, _)| *m == n) {
                                    Some(entry) => entry.1 += wt,
                                    None => list.push((n, wt)),
                                }
                            }
                        }
                    }
                }
            }
            let pairs: Vec<((usize, u32), Vec<(usize, f64)>)> = links.into_iter().collect();

            // Penning: one exit solve per (pair, node), overlaps with every
            // linked entrance wave
            let tasks: Vec<(usize, usize)> = (0..pairs.len())
                .flat_map(|a| (0..plan.nodes.len()).map(move |b| (a, b)))
                .collect();
            let pi_terms: Vec<Vec<f64>> = tasks
                .par_iter()
                .map(|&(a, b)| {
                    let ((pi, jp), ref list) = pairs[a];
                    let (e_plus, _) = plan.nodes[b];
                    let h_f = self.exit_step(&grid, v_min[pi], e_plus);
                    let lat = &exit_lattices[pi][level(&grid, h_f)];
                    let sol = propagate_on(lat, e_plus, jp, mu, &grid)?;
                    let (first, vals) = sol.fine_values();
                    let stride = (h_f / h).round() as usize;
                    Ok(list
                        .iter()
                        .map(|&(n, _)| overlap(&waves[n], &vc, stride, first, vals, h_f).norm_sqr())
                        .collect())
                })
                .collect::<Result<_>>()?;

            // Associative: every bound level of each linked exit wave
            let ai_terms: Vec<Vec<f64>> = pairs
                .par_iter()
                .map(|&((pi, jp), ref list)| {
                    let levels = self.exit_levels(Parity::BOTH[pi], jp);
                    list.iter()
                        .map(|&(n, _)| {
                            levels
                                .iter()
                                .map(|lv| {
                                    let stride = (lv.step / h).round() as usize;
                                    overlap(&waves[n], &vc, stride, lv.first_index, &lv.values, lv.step).norm_sqr()
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect();

            let mut pi_prob = vec![0.0; waves.len()];
            let mut ai_prob = vec![0.0; waves.len()];
            for (t, &(a, b)) in tasks.iter().enumerate() {
                let weight = plan.nodes[b].1;
                for (slot, &(n, wt)) in pairs[a].1.iter().enumerate() {
                    pi_prob[n] += wt * weight * pi_terms[t][slot];
                }
            }
            for (a, (_, list)) in pairs.iter().enumerate() {
                for (slot, &(n, wt)) in list.iter().enumerate() {
                    ai_prob[n] += wt * ai_terms[a][slot];
                }
            }

            let k2 = 2.0 * mu * e_star;
            for (n, w) in waves.iter().enumerate() {
                let damp = (-2.0 * w.phase.im).exp();
                let pi_p = pi2 * damp * pi_prob[n];
                let ai_p = ai2 * damp * ai_prob[n];
                let absorption = 1.0 - (-4.0 * w.phase.im).exp();
                let g = PI / k2 * (2 * w.j + 1) as f64;
                out.sigma_pi += g * pi_p;
                out.sigma_ai += g * ai_p;
                out.partial_waves.push(PartialWave {
                    j_star: w.j,
                    absorption,
                    pi_probability: pi_p,
                    ai_probability: ai_p,
                    flux_ratio: (absorption > 0.0).then(|| (pi_p + ai_p) / absorption),
                });
                let increment = g * (pi_p + ai_p);
                total += increment;
                if increment <= self.settings.j_star_tolerance * total {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                if quiet == 2 {
                    return Ok(out);
                }
            }
        }
    }

    /// Both spin channels over an increasing energy grid.
    pub fn table(&self, energies: &[f64]) -> Result<CrossSectionTable> {
        let rows = energies
            .iter()
            .map(|&e| {
                let s0 = self.sigma(0, e)?;
                let s1 = self.sigma(1, e)?;
                Ok(TableRow::from_channels(e, vec![s0, s1]))
            })
            .collect::<Result<Vec<_>>>()?;
        CrossSectionTable::new(self.system.name.clone(), rows)
    }
}

fn coupling_reach(ch: &EntranceChannel, c: &IonizationCoupling) -> Option<f64> {
    if ch.width().is_identically_zero() {
        return None;
    }
    let dr = 0.005;
    let vals: Vec<f64> = (1..=40_000).map(|i| c.value(ch.width().eval(i as f64 * dr))).collect();
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let last = vals.iter().rposition(|&v| v > COUPLING_CUTOFF * peak)?;
    Some((last + 1) as f64 * dr + 0.05)
}
