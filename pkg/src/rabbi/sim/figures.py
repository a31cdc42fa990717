"""Regret-versus-scale figures for finished experiment reports."""

from __future__ import annotations


def render_regret_figure(report, path: str) -> None:
    """One panel: mean regret against the scaling factor, one line per
    policy, with 90% confidence bars.  Written as a PNG file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    policies = []
    for row in report.rows:
        if row.policy not in policies:
            policies.append(row.policy)
    for policy in policies:
        rows = sorted((r for r in report.rows if r.policy == policy),
                      key=lambda r: r.k)
        ks = [r.k for r in rows]
        means = [r.mean_regret for r in rows]
        errs = [r.ci90_halfwidth for r in rows]
        ax.errorbar(ks, means, yerr=errs, marker="o", capsize=3, label=policy)
    ax.set_xlabel("scaling factor k")
    ax.set_ylabel("mean regret")
    ax.set_title(f"{report.config.setting}: regret vs scale "
                 f"({report.config.replications} replications)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
