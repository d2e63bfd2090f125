//! Dormand–Prince 8(5,3) explicit Runge–Kutta with Hairer's step-size control.
//! Steps are shortened to land exactly on requested output times.

use nalgebra::SVector;

use crate::error::{FwError, Result};

#[derive(Clone, Copy, Debug)]
pub struct StepControls {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub smallest_step: f64,
    pub largest_step: f64,
}

const SAFE: f64 = 0.9;
const FACC1: f64 = 1.0 / 3.0;
const FACC2: f64 = 6.0;
const EXPO1: f64 = 1.0 / 8.0;

type Vector<const D: usize> = SVector<f64, D>;

fn weighted_rms<const D: usize>(v: &Vector<D>, y: &Vector<D>, c: &StepControls) -> f64 {
    let s: f64 = (0..D)
        .map(|i| {
            let sk = c.atol + c.rtol * y[i].abs();
            (v[i] / sk).powi(2)
        })
        .sum();
    (s / D as f64).sqrt()
}

fn initial_step<const D: usize, F>(f: &mut F, t: f64, y: &Vector<D>, f0: &Vector<D>, c: &StepControls, dir: f64) -> Result<f64>
where
    F: FnMut(f64, &Vector<D>) -> Result<Vector<D>>,
{
    let d0 = weighted_rms(y, y, c);
    let d1 = weighted_rms(f0, y, c);
    let mut h = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(c.h_max);
    let y1 = y + f0 * (dir * h);
    let f1 = f(t + dir * h, &y1)?;
    let d2 = weighted_rms(&(f1 - f0), y, c) / h;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(EXPO1)
    };
    Ok((100.0 * h).min(h1).min(c.h_max))
}

/// Integrates y′ = f(t, y) from `t0` to the last entry of `outputs` (increasing, all
/// greater than `t0`). `on_step` runs after every accepted step and may modify the
/// state (projection); its return value is ignored. Returns the states at `outputs`.
pub fn integrate<const D: usize, F, G>(
    mut f: F,
    t0: f64,
    y0: Vector<D>,
    outputs: &[f64],
    controls: &StepControls,
    mut on_step: G,
) -> Result<(Vec<Vector<D>>, StepStats)>
where
    F: FnMut(f64, &Vector<D>) -> Result<Vector<D>>,
    G: FnMut(f64, &mut Vector<D>) -> Result<()>,
{
    if outputs.is_empty() {
        return Ok((Vec::new(), StepStats::default()));
    }
    if outputs.windows(2).any(|w| !(w[1] > w[0])) || !(outputs[0] > t0) {
        return Err(FwError::InvalidParameter("output times must increase past the start time".into()));
    }
    if !(controls.rtol > 0.0) || !(controls.atol >= 0.0) {
        return Err(FwError::InvalidParameter("tolerances must be positive".into()));
    }
    let mut stats = StepStats {
        smallest_step: f64::INFINITY,
        ..StepStats::default()
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.evaluations += 1;
    let mut h = match controls.h_init {
        Some(h) => h.min(controls.h_max),
        None => {
            stats.evaluations += 1;
            initial_step(&mut f, t, &y, &k1, controls, 1.0)?
        }
    };
    let mut last_rejected = false;
    let mut out = Vec::with_capacity(outputs.len());
    let mut next = 0;

    while next < outputs.len() {
        if stats.accepted + stats.rejected >= controls.max_steps {
            return Err(FwError::Stiffness { t, h });
        }
        let target = outputs[next];
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(FwError::Stiffness { t, h });
        }
        let lands = t + h >= target - 10.0 * f64::EPSILON * target.abs().max(1.0);
        let step = if lands { target - t } else { h };

        let k2 = f(t + C2 * step, &(y + k1 * (A21 * step)))?;
        let k3 = f(t + C3 * step, &(y + (k1 * A31 + k2 * A32) * step))?;
        let k4 = f(t + C4 * step, &(y + (k1 * A41 + k3 * A43) * step))?;
        let k5 = f(t + C5 * step, &(y + (k1 * A51 + k3 * A53 + k4 * A54) * step))?;
        let k6 = f(t + C6 * step, &(y + (k1 * A61 + k4 * A64 + k5 * A65) * step))?;
        let k7 = f(t + C7 * step, &(y + (k1 * A71 + k4 * A74 + k5 * A75 + k6 * A76) * step))?;
        let k8 = f(
            t + C8 * step,
            &(y + (k1 * A81 + k4 * A84 + k5 * A85 + k6 * A86 + k7 * A87) * step),
        )?;
        let k9 = f(
            t + C9 * step,
            &(y + (k1 * A91 + k4 * A94 + k5 * A95 + k6 * A96 + k7 * A97 + k8 * A98) * step),
        )?;
        let k10 = f(
            t + C10 * step,
            &(y + (k1 * A101 + k4 * A104 + k5 * A105 + k6 * A106 + k7 * A107 + k8 * A108 + k9 * A109) * step),
        )?;
        let k11 = f(
            t + C11 * step,
            &(y + (k1 * A111 + k4 * A114 + k5 * A115 + k6 * A116 + k7 * A117 + k8 * A118 + k9 * A119 + k10 * A1110)
                * step),
        )?;
        let t_new = if lands { target } else { t + step };
        let y12 = y
            + (k1 * A121 + k4 * A124 + k5 * A125 + k6 * A126 + k7 * A127 + k8 * A128 + k9 * A129 + k10 * A1210 + k11 * A1211)
                * step;
        let k12 = f(t_new, &y12)?;
        stats.evaluations += 11;
        let incr = k1 * B1 + k6 * B6 + k7 * B7 + k8 * B8 + k9 * B9 + k10 * B10 + k11 * B11 + k12 * B12;
        let y_new = y + incr * step;

        // Combined 5th- and 3rd-order error estimate.
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..D {
            let sk = controls.atol + controls.rtol * y[i].abs().max(y_new[i].abs());
            let e2 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err2 += (e2 / sk).powi(2);
            let e1 = ER1 * k1[i] + ER6 * k6[i] + ER7 * k7[i] + ER8 * k8[i] + ER9 * k9[i] + ER10 * k10[i] + ER11 * k11[i]
                + ER12 * k12[i];
            err += (e1 / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = step.abs() * err * (1.0 / (deno * D as f64)).sqrt();

        let fac11 = err.powf(EXPO1);
        let fac = FACC2.recip().max(FACC1.recip().min(fac11 / SAFE));
        let mut h_new = step / fac;

        if err <= 1.0 {
            stats.accepted += 1;
            stats.smallest_step = stats.smallest_step.min(step.abs());
            stats.largest_step = stats.largest_step.max(step.abs());
            t = t_new;
            y = y_new;
            on_step(t, &mut y)?;
            k1 = f(t, &y)?;
            stats.evaluations += 1;
            if last_rejected {
                h_new = h_new.min(step);
            }
            last_rejected = false;
            if lands {
                out.push(y);
                next += 1;
                // A shortened landing step says nothing about the natural step size.
                h_new = h_new.max(h);
            }
        } else {
            h_new = step / FACC1.recip().min(fac11 / SAFE);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = h_new.min(controls.h_max);
    }
    Ok((out, stats))
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;
const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;
const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
