//! Plotting scripts emitted next to a run. Each resolves its inputs relative
//! to its own location, so a run directory can be moved as a whole.

const PREAMBLE: &str = r#"import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
RUN = os.path.join(HERE, "..")


def series(name):
    return np.atleast_2d(np.loadtxt(os.path.join(RUN, "series", name + ".csv"), delimiter=",", skiprows=1))

"#;

const PROFILE_EVOLUTION: &str = r#"
fig, ax = plt.subplots()
files = sorted(glob.glob(os.path.join(RUN, "snapshots", "snap_*.csv")))
for path in files[:: max(1, len(files) // 12)]:
    with open(path) as f:
        frame, timestamp, _, _ = [x.strip() for x in f.readline()[2:].split(",")]
    if frame != "rescaled":
        continue
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    ax.plot(data[:, 0], data[:, 1], label="tau = %.2f" % float(timestamp))
ax.axhline(np.sqrt(2.0), color="k", linestyle=":")
ax.set_xlabel("y")
ax.set_ylabel("v(y, tau)")
ax.set_xlim(0, 40)
ax.set_ylim(0, 15)
ax.legend(fontsize="small")
fig.savefig(os.path.join(HERE, "profile_evolution.png"), dpi=150)
"#;

const A_TAU: &str = r#"
d = series("fit_series")
fig, ax = plt.subplots()
ax.plot(d[:, 0], d[:, 1], "o-", label="a(tau)")
ax.axhline(0.5, color="k", linestyle=":")
ax.set_xlabel("tau")
ax.set_ylabel("a")
ax2 = ax.twinx()
ax2.plot(d[:, 0], np.abs(d[:, 1] - 0.5) * d[:, 0], "s--", color="tab:red", label="|a - 1/2| tau")
ax2.set_ylabel("|a - 1/2| tau")
fig.legend()
fig.savefig(os.path.join(HERE, "a_tau.png"), dpi=150)
"#;

const TAU_B: &str = r#"
d = series("fit_series")
fig, ax = plt.subplots()
ax.plot(d[:, 0], d[:, 0] * d[:, 2], "o-")
ax.axhline(1.0, color="k", linestyle=":")
ax.axhspan(0.75, 1.25, color="0.9")
ax.set_xlabel("tau")
ax.set_ylabel("tau b(tau)")
fig.savefig(os.path.join(HERE, "tau_b.png"), dpi=150)
"#;

const ETA_NORMS: &str = r#"
d = series("fit_series")
tau2 = d[:, 0] ** 2
fig, ax = plt.subplots()
for col, name in [(5, "<y>^-3 eta"), (6, "<y>^-2 grad eta"), (7, "<y>^-1 hess eta")]:
    ax.semilogy(d[:, 0], tau2 * d[:, col], "o-", label="tau^2 |%s|" % name)
ax.set_xlabel("tau")
ax.legend()
fig.savefig(os.path.join(HERE, "eta_norms.png"), dpi=150)
"#;

const FINAL_RATIO: &str = r#"
d = series("final_ratio")
fig, ax = plt.subplots()
ax.semilogx(d[:, 0], d[:, 1], "o-")
ax.axhline(1.0, color="k", linestyle=":")
ax.axhspan(0.6, 1.4, color="0.9")
ax.invert_xaxis()
ax.set_xlabel("|x|")
ax.set_ylabel("R(x) = u(x) sqrt(-ln|x|) / |x|")
fig.savefig(os.path.join(HERE, "final_ratio.png"), dpi=150)
"#;

const BODIES: [(&str, &str); 5] = [
    ("profile_evolution.py", PROFILE_EVOLUTION),
    ("a_tau.py", A_TAU),
    ("tau_b.py", TAU_B),
    ("eta_norms.py", ETA_NORMS),
    ("final_ratio.py", FINAL_RATIO),
];

/// Script names and full contents, in emission order.
pub fn plot_scripts() -> Vec<(&'static str, String)> {
    BODIES.iter().map(|(name, body)| (*name, format!("{PREAMBLE}{body}"))).collect()
}
