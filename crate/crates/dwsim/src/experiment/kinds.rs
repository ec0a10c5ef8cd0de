//! One function per experiment kind; each fills the tables of a sweep point.

use std::collections::BTreeMap;

use super::config::{ExperimentConfig, Kind};
use super::output::{Schema, Table};
use crate::analysis::{
    fidelity, participation_entropy, poisson_density, random_fock_states, rate_from_probability,
    state_fidelity, subspace_fidelity, time_average, unfold_and_classify, wigner_dyson_density, SpectralReport,
};
use crate::chain::{
    assemble_fermi, floquet_nnn_drive, floquet_time_scale, nnn_effective_operator, occupied, parse_occupation, FermiChainSpec,
    FockBasis, ModelParams, Parity,
};
use crate::encoding::{
    assemble_ising, encode_ising, encode_ising_driven, enumerate_m_subspace, fock_state, site_occupations, Gauge, Layout,
};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_driven, evolve_driven_fermi, evolve_lindblad, evolve_unitary, rescale, NoiseSpec, RescalePolicy, SampleDiagnostics,
    DEFAULT_TOLERANCE, LINDBLAD_TOLERANCE,
};
use crate::exec::{self, Execution};
use crate::linalg::lowest_eigenpairs;
use crate::operator::QuantumState;
use crate::sw::{block_decompose, operator_fidelity, sw_effective_hamiltonian};

/// Parameters of one sweep point after overrides.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub n: usize,
    pub model: Option<ModelParams>,
    pub spec: FermiChainSpec,
    pub j: f64,
    pub rescale: RescalePolicy,
    pub noise: Option<NoiseSpec>,
    pub tol: f64,
}

pub fn resolve(cfg: &ExperimentConfig, params: &BTreeMap<String, f64>) -> Result<Resolved> {
    let mut model = cfg.model.clone();
    let mut j = cfg.j;
    let mut rescale = cfg.rescale;
    let mut noise = cfg.noise;
    for (name, &x) in params {
        let ok = match (name.as_str(), model.as_mut()) {
            ("J", _) => {
                j = x;
                true
            }
            ("alpha", _) => {
                rescale = RescalePolicy::Alpha(x);
                true
            }
            ("dephase", _) => match noise.as_mut() {
                Some(n) => {
                    n.dephase = x;
                    true
                }
                None => false,
            },
            (p, Some(ModelParams::Ssh { v, w })) => set(p, x, &mut [("v", v), ("w", w)]),
            (p, Some(ModelParams::AubryAndre { lambda, beta, phi, mu })) => {
                set(p, x, &mut [("lambda", lambda), ("beta", beta), ("phi", phi), ("mu", mu)])
            }
            (p, Some(ModelParams::Xxz { t, delta, theta })) => set(p, x, &mut [("t", t), ("delta", delta), ("theta", theta)]),
            (p, Some(ModelParams::FloquetNnn { k1, k2, tau })) => set(p, x, &mut [("k1", k1), ("k2", k2), ("tau", tau)]),
            (_, None) => false,
        };
        if !ok {
            return Err(Error::Config(format!("sweep parameter {name} does not apply to this experiment")));
        }
    }
    let n = cfg.n_sites().ok_or_else(|| Error::Config("number of sites unknown".into()))?;
    let spec = match (&model, &cfg.chain) {
        (Some(m), _) => m.fermi_spec(n)?,
        (None, Some(c)) => c.spec(Parity::Odd)?,
        (None, None) => return Err(Error::Config("no model".into())),
    };
    Ok(Resolved {
        n,
        model,
        spec,
        j,
        rescale,
        noise: noise.map(|c| c.spec()).filter(|s| !s.is_silent()),
        tol: cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE),
    })
}

fn set(name: &str, x: f64, slots: &mut [(&str, &mut f64)]) -> bool {
    for (k, slot) in slots.iter_mut() {
        if *k == name {
            **slot = x;
            return true;
        }
    }
    false
}

/// Tables and scalars of one sweep point.
#[derive(Clone, Debug, Default)]
pub struct GroupOutput {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
}

impl GroupOutput {
    fn put(&mut self, k: impl Into<String>, v: f64) {
        self.summary.insert(k.into(), v);
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub r: &'a Resolved,
    pub exec: Execution,
    /// file-name prefix of the group, empty for a single point
    pub prefix: String,
}

impl Ctx<'_> {
    fn table(&self, base: &str, schema: Schema) -> Table {
        Table::new(format!("{}{base}", self.prefix), schema)
    }
}

pub fn run_kind(ctx: &Ctx) -> Result<GroupOutput> {
    match ctx.cfg.kind {
        Kind::SshStatic => ssh_static(ctx),
        Kind::XxzStatistics => xxz_statistics(ctx),
        Kind::AaHalfFilling => half_filling(ctx),
        Kind::FloquetNnn => floquet(ctx),
        Kind::AaSingle | Kind::AaDqpt | Kind::XxzDynamics | Kind::Custom => dynamics(ctx),
    }
}

/// Site occupations of an occupation-basis state.
pub fn fock_occupations(state: &QuantumState, basis: &FockBasis) -> Vec<f64> {
    let pops = state.populations();
    let norm: f64 = pops.iter().sum();
    (1..=basis.n)
        .map(|k| basis.states.iter().zip(&pops).filter(|(&o, _)| occupied(o, basis.n, k)).map(|(_, p)| p).sum::<f64>() / norm)
        .collect()
}

fn occupation_rows(t: &mut Table, time: f64, wall: f64, p: &[f64]) {
    for (k, &pk) in p.iter().enumerate() {
        t.push(vec![time.into(), wall.into(), (k + 1).into(), pk.into()]);
    }
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

struct Start {
    occ: u64,
    m: usize,
    spec: FermiChainSpec,
    basis: FockBasis,
    exact0: QuantumState,
}

fn start(ctx: &Ctx, spec: &FermiChainSpec) -> Result<Start> {
    let s = ctx.cfg.initial_occupation().ok_or_else(|| Error::Config("initial occupation missing".into()))?;
    let occ = parse_occupation(&s)?;
    let m = occ.count_ones() as usize;
    let spec = spec.clone().with_parity(Parity::of(m));
    let basis = FockBasis::new(spec.n, m)?;
    let idx = basis.index_of(occ).ok_or_else(|| Error::Config(format!("occupation {s} not in the basis")))?;
    let exact0 = QuantumState::basis_state(idx, basis.tag())?;
    Ok(Start { occ, m, spec, basis, exact0 })
}

/// Quench from a Fock state: exact block vs the encoded register, optional noise.
fn dynamics(ctx: &Ctx) -> Result<GroupOutput> {
    let r = ctx.r;
    let st = start(ctx, &r.spec)?;
    let times = ctx.cfg.time_values();
    let (scaled, wall, alpha) = rescale(&st.spec, &times, r.rescale)?;
    let parity = Parity::of(st.m);
    let ising = encode_ising(&scaled, r.j, parity, Gauge::Ferro)?;
    let layout = ising.layout();
    let h_dw = assemble_ising(&ising)?;
    let psi0 = fock_state(st.occ, &layout)?;
    let sub = enumerate_m_subspace(st.spec.n, st.m, parity, layout.boundary)?;
    let h_f = assemble_fermi(&st.spec, st.m)?;
    let exact = evolve_unitary(&h_f, &st.exact0, &times, r.tol)?;
    let dw = evolve_unitary(&h_dw, &psi0, &wall, r.tol)?;
    let noisy = match &r.noise {
        Some(noise) => {
            let tol = ctx.cfg.tolerance.unwrap_or(LINDBLAD_TOLERANCE);
            Some(evolve_lindblad(&h_dw, &psi0, &wall, noise, tol, ctx.exec)?)
        }
        None => None,
    };

    let mut out = GroupOutput::default();
    let mut occ_exact = ctx.table("occupations_exact.csv", Schema::Occupations);
    let mut occ_dw = ctx.table("occupations_dw.csv", Schema::Occupations);
    let mut fid = ctx.table("fidelity.csv", Schema::Fidelity);
    let mut surv = ctx.table(
        "survival.csv",
        Schema::custom(&["T_evol", "T_wall", "survival_exact", "survival_dw", "survival_dw_noisy", "rate_exact", "rate_dw", "rate_dw_noisy"]),
    );
    let (mut sf, mut sub_f, mut rate_err) = (Vec::new(), Vec::new(), 0.0f64);
    let n = st.spec.n;
    for (k, (&t, &tw)) in times.iter().zip(&wall).enumerate() {
        occupation_rows(&mut occ_exact, t, tw, &fock_occupations(&exact[k], &st.basis));
        occupation_rows(&mut occ_dw, t, tw, &site_occupations(&dw[k], &layout)?);
        let f = state_fidelity(&exact[k], &dw[k], &layout)?;
        let fs = subspace_fidelity(&dw[k], &sub)?;
        fid.push(vec![t.into(), tw.into(), f.into(), fs.into()]);
        sf.push(f);
        sub_f.push(fs);
        let pe = fidelity(&st.exact0, &exact[k])?;
        let pd = fidelity(&psi0, &dw[k])?;
        let pn = match &noisy {
            Some(run) => fidelity(&psi0, &run.states[k])?,
            None => f64::NAN,
        };
        let (re, rd) = (rate_from_probability(pe, n), rate_from_probability(pd, n));
        if re.is_finite() && rd.is_finite() {
            rate_err = rate_err.max((re - rd).abs());
        }
        let rn = if pn.is_nan() { f64::NAN } else { rate_from_probability(pn, n) };
        surv.push(vec![t.into(), tw.into(), pe.into(), pd.into(), pn.into(), re.into(), rd.into(), rn.into()]);
    }
    out.put("alpha", alpha);
    out.put("min_state_fidelity", min(&sf));
    out.put("min_subspace_fidelity", min(&sub_f));
    out.put("final_state_fidelity", *sf.last().unwrap_or(&f64::NAN));
    out.put("infidelity_final", 1.0 - sf.last().unwrap_or(&f64::NAN));
    out.put("infidelity_subspace_final", 1.0 - sub_f.last().unwrap_or(&f64::NAN));
    out.put("max_rate_error", rate_err);
    out.labels.insert("initial".into(), ctx.cfg.initial_occupation().unwrap_or_default());
    out.tables.extend([occ_exact, occ_dw, fid, surv]);

    if let Some(run) = noisy {
        let mut occ_n = ctx.table("occupations_dw_noisy.csv", Schema::Occupations);
        let mut fid_n = ctx.table("fidelity_noisy.csv", Schema::Fidelity);
        let mut diag = ctx.table("diagnostics.csv", Schema::custom(&["T_evol", "T_wall", "trace", "hermiticity", "min_eigenvalue"]));
        let mut fn_ = Vec::new();
        for (k, (&t, &tw)) in times.iter().zip(&wall).enumerate() {
            occupation_rows(&mut occ_n, t, tw, &site_occupations(&run.states[k], &layout)?);
            let f = state_fidelity(&exact[k], &run.states[k], &layout)?;
            fid_n.push(vec![t.into(), tw.into(), f.into(), subspace_fidelity(&run.states[k], &sub)?.into()]);
            fn_.push(f);
            let SampleDiagnostics { trace, hermiticity, min_eigenvalue, .. } = run.diagnostics[k];
            diag.push(vec![t.into(), tw.into(), trace.into(), hermiticity.into(), min_eigenvalue.into()]);
        }
        out.put("min_state_fidelity_noisy", min(&fn_));
        out.put("max_trace_drift", run.diagnostics.iter().map(|d| (d.trace - 1.0).abs()).fold(0.0, f64::max));
        out.put("min_eigenvalue", run.diagnostics.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min));
        out.put("lindblad_steps", run.steps as f64);
        out.tables.extend([occ_n, fid_n, diag]);
    }
    Ok(out)
}

fn ssh_static(ctx: &Ctx) -> Result<GroupOutput> {
    let r = ctx.r;
    let n = r.n;
    let sectors = ctx.cfg.sectors.clone().unwrap_or_else(|| vec![1]);
    let mut out = GroupOutput::default();
    let mut spectrum = ctx.table("spectrum.csv", Schema::custom(&["M", "index", "eigenvalue_exact", "eigenvalue_eff", "eigenvalue_dw"]));
    let mut vectors = ctx.table("eigenvectors.csv", Schema::custom(&["M", "index", "site", "weight_exact", "weight_dw"]));
    for &m in &sectors {
        let parity = Parity::of(m);
        let (spec, _, alpha) = rescale(&r.spec.clone().with_parity(parity), &[], r.rescale)?;
        out.put("alpha", alpha);
        let ising = encode_ising(&spec, r.j, parity, Gauge::Ferro)?;
        let h = assemble_ising(&ising)?;
        let dec = block_decompose(&h, &spec, r.j, parity)?;
        let h_f = assemble_fermi(&spec, m)?;
        let exact = h_f.eigh()?;
        let heff = sw_effective_hamiltonian(&dec, m)?;
        let eff = heff.eigenvalues()?;
        let fop = operator_fidelity(&h_f, &heff)?;
        out.put(format!("op_fidelity_m{m}"), fop);
        out.put(format!("infidelity_op_m{m}"), 1.0 - fop);
        // the lowest sector of a parity is the bottom of the full spectrum
        let lowest = m == if parity == Parity::Odd { 1 } else { 0 };
        let dw = if lowest {
            let (vals, vecs) = lowest_eigenpairs(h.matrix(), exact.dim(), 1e-10, 0)?;
            Some((vals.iter().map(|v| v - dec.offsets[&m]).collect::<Vec<_>>(), vecs))
        } else {
            None
        };
        for i in 0..exact.dim() {
            let d = dw.as_ref().map_or(f64::NAN, |(v, _)| v[i]);
            spectrum.push(vec![m.into(), i.into(), exact.values[i].into(), eff[i].into(), d.into()]);
        }
        if let Some((vals, vecs)) = &dw {
            let layout = ising.layout();
            let err = vals.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            out.put(format!("max_eigenvalue_error_m{m}"), err);
            let mut midgap = 0usize;
            let mut edge = f64::INFINITY;
            for (i, v) in vecs.iter().enumerate() {
                let w_dw = site_occupations(&QuantumState::pure(v.clone(), layout.tag())?, &layout)?;
                let basis = FockBasis::new(n, m)?;
                let w_ex = fock_occupations(&QuantumState::pure(exact.column(i), basis.tag())?, &basis);
                for k in 0..n {
                    vectors.push(vec![m.into(), i.into(), (k + 1).into(), w_ex[k].into(), w_dw[k].into()]);
                }
                if m == 1 && vals[i].abs() <= 0.05 {
                    midgap += 1;
                }
                // the two central levels of a single particle carry the edge modes
                if m == 1 && n >= 4 && (i + 1 == n / 2 || i == n / 2) {
                    let total: f64 = w_dw.iter().sum();
                    let ends = w_dw[0] + w_dw[1] + w_dw[n - 2] + w_dw[n - 1];
                    edge = edge.min(ends / total);
                }
            }
            if m == 1 {
                out.put("midgap_states", midgap as f64);
                out.put("central_edge_weight", edge);
            }
        }
    }
    out.tables.extend([spectrum, vectors]);
    Ok(out)
}

fn spectral_tables(ctx: &Ctx, tag: &str, rep: &SpectralReport) -> (Table, Table) {
    let e = &rep.eigenvalues;
    let n = e.len();
    let mut t = ctx.table(&format!("spectral_{tag}.csv"), Schema::Spectral);
    for i in 0..n {
        let r = if i > 0 && i + 1 < n {
            let (a, b) = (e[i] - e[i - 1], e[i + 1] - e[i]);
            if a > 0.0 && b > 0.0 { (b / a).min(a / b) } else { f64::NAN }
        } else {
            f64::NAN
        };
        let s = if i >= rep.discarded && i - rep.discarded < rep.unfolded_spacings.len() {
            rep.unfolded_spacings[i - rep.discarded]
        } else {
            f64::NAN
        };
        t.push(vec![i.into(), e[i].into(), r.into(), s.into()]);
    }
    let mut h = ctx.table(&format!("spacing_histogram_{tag}.csv"), Schema::custom(&["bin_lo", "bin_hi", "count", "density", "p_poisson", "p_wigner_dyson"]));
    let total: usize = rep.counts.iter().sum();
    for (k, &c) in rep.counts.iter().enumerate() {
        let (lo, hi) = (rep.bin_edges[k], rep.bin_edges[k + 1]);
        let mid = 0.5 * (lo + hi);
        let dens = c as f64 / (total.max(1) as f64 * rep.bin_width);
        h.push(vec![lo.into(), hi.into(), c.into(), dens.into(), poisson_density(mid).into(), wigner_dyson_density(mid).into()]);
    }
    (t, h)
}

fn class_name(rep: &SpectralReport) -> String {
    serde_json::to_value(rep.classification).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn xxz_statistics(ctx: &Ctx) -> Result<GroupOutput> {
    let r = ctx.r;
    let m = ctx.cfg.sectors.as_ref().and_then(|s| s.first().copied()).unwrap_or(r.n.div_ceil(2));
    let parity = Parity::of(m);
    // spectra are compared in units of the rescaled model
    let (spec, _, alpha) = rescale(&r.spec.clone().with_parity(parity), &[], r.rescale)?;
    let h_f = assemble_fermi(&spec, m)?;
    let h = assemble_ising(&encode_ising(&spec, r.j, parity, Gauge::Ferro)?)?;
    let dec = block_decompose(&h, &spec, r.j, parity)?;
    let heff = sw_effective_hamiltonian(&dec, m)?;
    let mut out = GroupOutput::default();
    out.put("op_fidelity", operator_fidelity(&h_f, &heff)?);
    out.put("M", m as f64);
    out.put("alpha", alpha);
    for (tag, op) in [("exact", &h_f), ("eff", &heff)] {
        let eigs = op.eigenvalues()?;
        let rep = unfold_and_classify(&eigs, eigs.len() / 10, 12, 0.125)?;
        out.put(format!("mean_ratio_{tag}"), rep.mean_ratio);
        out.put(format!("log_likelihood_poisson_{tag}"), rep.log_likelihood_poisson);
        out.put(format!("log_likelihood_wigner_dyson_{tag}"), rep.log_likelihood_wigner_dyson);
        out.labels.insert(format!("classification_{tag}"), class_name(&rep));
        let (t, hist) = spectral_tables(ctx, tag, &rep);
        out.tables.extend([t, hist]);
    }
    Ok(out)
}

/// Time-averaged S₂ over random localized starts with up to ⌈N/2⌉ particles.
fn half_filling(ctx: &Ctx) -> Result<GroupOutput> {
    let r = ctx.r;
    let n = r.n;
    let times = ctx.cfg.time_values();
    let tmax = *times.last().unwrap_or(&0.0);
    let [t0, t1] = ctx.cfg.window.unwrap_or([0.5 * tmax, tmax]);
    let seed = ctx.cfg.ensemble.seed.unwrap_or(0);
    let starts = random_fock_states(n, n.div_ceil(2), ctx.cfg.ensemble.count, seed);
    let members: Vec<(usize, u64)> = starts.into_iter().enumerate().collect();
    let runs = exec::map(ctx.exec, &members, |&(_, occ)| -> Result<(usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let m = occ.count_ones() as usize;
        let parity = Parity::of(m);
        let spec = r.spec.clone().with_parity(parity);
        let (scaled, wall, _) = rescale(&spec, &times, r.rescale)?;
        let ising = encode_ising(&scaled, r.j, parity, Gauge::Ferro)?;
        let layout = ising.layout();
        let dw = evolve_unitary(&assemble_ising(&ising)?, &fock_state(occ, &layout)?, &wall, r.tol)?;
        let basis = FockBasis::new(n, m)?;
        let e0 = QuantumState::basis_state(basis.index_of(occ).unwrap(), basis.tag())?;
        let exact = evolve_unitary(&assemble_fermi(&spec, m)?, &e0, &times, r.tol)?;
        let sub = enumerate_m_subspace(n, m, parity, layout.boundary)?;
        let mut se = Vec::new();
        let mut sd = Vec::new();
        for k in 0..times.len() {
            se.push(participation_entropy(&exact[k], &sub)?.value);
            sd.push(match participation_entropy(&dw[k], &sub) {
                Ok(p) => p.value,
                Err(Error::LeftSector(_)) => f64::NAN,
                Err(e) => return Err(e),
            });
        }
        Ok((m, wall, se, sd))
    });
    let mut out = GroupOutput::default();
    let mut trace = ctx.table("pe_trace.csv", Schema::custom(&["T_evol", "T_wall", "member", "M", "s2pe_exact", "s2pe_dw"]));
    let (mut avg_e, mut avg_d, mut left) = (Vec::new(), Vec::new(), 0usize);
    for (member, run) in runs.into_iter().enumerate() {
        let (m, wall, se, sd) = run?;
        for k in 0..times.len() {
            trace.push(vec![times[k].into(), wall[k].into(), member.into(), m.into(), se[k].into(), sd[k].into()]);
        }
        left += sd.iter().filter(|x| x.is_nan()).count();
        let series = |v: &[f64]| times.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        avg_e.push(time_average(&series(&se), t0, t1)?);
        avg_d.push(time_average(&series(&sd), t0, t1).unwrap_or(f64::NAN));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let std = |v: &[f64]| {
        let mu = mean(v);
        (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    out.put("s2pe_exact", mean(&avg_e));
    out.put("s2pe_dw", mean(&avg_d));
    out.put("s2pe_exact_std", std(&avg_e));
    out.put("s2pe_dw_std", std(&avg_d));
    out.put("left_sector_samples", left as f64);
    out.tables.push(trace);
    Ok(out)
}

/// Stroboscopic drive times closest to the requested effective times.
pub fn stroboscopic(times: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let scale = floquet_time_scale(tau);
    let wall: Vec<f64> = times.iter().map(|t| (t / (scale * tau)).round() * tau).collect();
    if wall.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("sample times closer than one drive period ({tau}) in effective time")));
    }
    Ok((wall.iter().map(|w| w * scale).collect(), wall))
}

fn floquet(ctx: &Ctx) -> Result<GroupOutput> {
    let r = ctx.r;
    let Some(ModelParams::FloquetNnn { k1, k2, tau }) = r.model else {
        return Err(Error::Config("floquet_nnn needs the floquet_nnn model".into()));
    };
    let st = start(ctx, &r.spec)?;
    let parity = Parity::of(st.m);
    let drive = floquet_nnn_drive(k1, k2, tau, r.n)?;
    let (times, wall) = stroboscopic(&ctx.cfg.time_values(), tau)?;
    let reference_h = nnn_effective_operator(k1, -k2, r.n, st.m)?;
    let reference = evolve_unitary(&reference_h, &st.exact0, &times, r.tol)?;
    let ising = encode_ising_driven(&st.spec, &drive, r.j, parity, Gauge::Ferro)?;
    let layout: Layout = ising.layout();
    let psi0 = fock_state(st.occ, &layout)?;
    let dw = evolve_driven(&ising, &psi0, &wall, r.tol, ctx.exec)?;
    let fermi = evolve_driven_fermi(&st.spec, &drive, st.m, &st.exact0, &wall, r.tol)?;
    let sub = enumerate_m_subspace(r.n, st.m, parity, layout.boundary)?;

    let mut out = GroupOutput::default();
    let mut occ_ref = ctx.table("occupations_reference.csv", Schema::Occupations);
    let mut occ_dw = ctx.table("occupations_dw.csv", Schema::Occupations);
    let mut occ_f = ctx.table("occupations_fermi.csv", Schema::Occupations);
    let mut fid = ctx.table("fidelity.csv", Schema::Fidelity);
    let mut fid_f = ctx.table("fidelity_fermi.csv", Schema::custom(&["T_evol", "T_wall", "state_fidelity"]));
    let (mut fd, mut ff, mut fs) = (Vec::new(), Vec::new(), Vec::new());
    for (k, (&t, &tw)) in times.iter().zip(&wall).enumerate() {
        occupation_rows(&mut occ_ref, t, tw, &fock_occupations(&reference[k], &st.basis));
        occupation_rows(&mut occ_dw, t, tw, &site_occupations(&dw.states[k], &layout)?);
        occupation_rows(&mut occ_f, t, tw, &fock_occupations(&fermi.states[k], &st.basis));
        let f = state_fidelity(&reference[k], &dw.states[k], &layout)?;
        let s = subspace_fidelity(&dw.states[k], &sub)?;
        let g = fidelity(&reference[k], &fermi.states[k])?;
        fid.push(vec![t.into(), tw.into(), f.into(), s.into()]);
        fid_f.push(vec![t.into(), tw.into(), g.into()]);
        fd.push(f);
        ff.push(g);
        fs.push(s);
    }
    out.put("min_state_fidelity", min(&fd));
    out.put("final_state_fidelity", *fd.last().unwrap_or(&f64::NAN));
    out.put("min_subspace_fidelity", min(&fs));
    out.put("min_fermi_fidelity", min(&ff));
    out.put("final_fermi_fidelity", *ff.last().unwrap_or(&f64::NAN));
    out.put("dw_step", dw.step);
    out.put("dw_step_change", dw.step_change);
    out.put("fermi_step", fermi.step);
    out.labels.insert("initial".into(), ctx.cfg.initial_occupation().unwrap_or_default());
    out.tables.extend([occ_ref, occ_dw, occ_f, fid, fid_f]);
    Ok(out)
}
