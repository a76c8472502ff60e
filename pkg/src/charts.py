# src/charts.py
"""SVG figures derived from the result frames. CSVs stay the source of truth."""
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt # noqa: E402
import seaborn as sns # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date keep the SVG bytes stable across runs
plt.rcParams["svg.hashsalt"] = "bwlab"
sns.set_theme(style="whitegrid", palette="deep")


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Wrote %s", path)
    return path


def snd_chart(frame, path, x_label):
    """One polyline per transform over the swept axis, log₂ x-axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for transform, rows in frame.groupby("transform", sort=False):
        ax.plot(rows["axis_value"], rows["snd"], marker="o", label=transform)
    ax.set_xscale("log", base=2)
    ax.set_xlabel(x_label)
    ax.set_ylabel("SND")
    ax.legend()
    return _save(fig, path)


def scatter_chart(frame, path, title, axes_labels):
    """Population cloud (grey) with the normalized probe outputs on top."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    population = frame[frame["kind"] == "population"]
    normalized = frame[frame["kind"] == "normalized"]
    sns.scatterplot(data=population, x="x", y="y", color="0.75", s=8, linewidth=0, ax=ax)
    sns.scatterplot(data=normalized, x="x", y="y", color="tab:red", s=14, linewidth=0, ax=ax)
    ax.set_title(title)
    ax.set_xlabel(axes_labels[0])
    ax.set_ylabel(axes_labels[1])
    return _save(fig, path)


def spectrum_chart(frame, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for (transform, group), rows in frame.groupby(["transform", "group"], sort=False):
        ax.plot(rows["index"], rows["eigenvalue"], label=f"{transform} g={group}")
    ax.set_yscale("log")
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("eigenvalue of output covariance")
    ax.legend()
    return _save(fig, path)


def training_chart(frame, path, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    rows = frame[~frame["diverged"]]
    ax.plot(rows["epoch"], rows["train_error"], marker=".", label="train error")
    if rows["test_acc"].notna().any():
        ax.plot(rows["epoch"], 1.0 - rows["test_acc"], marker=".", label="test error")
    if frame["diverged"].any():
        ax.axvline(frame.loc[frame["diverged"], "epoch"].iloc[0], color="tab:red", linestyle="--", label="diverged")
    ax.set_xlabel("epoch")
    ax.set_ylabel("error rate")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def estimation_chart(summary, path):
    """Heatmap of the mean accuracy difference per (width, batch), one panel per transform and lr."""
    panels = list(summary.groupby(["transform", "lr"], sort=False))
    fig, axes = plt.subplots(1, len(panels), figsize=(4.5 * len(panels), 4), squeeze=False)
    for ax, ((transform, lr), rows) in zip(axes[0], panels):
        grid = rows.pivot(index="width", columns="batch", values="mean_difference")
        sns.heatmap(grid, annot=True, fmt=".3f", center=0.0, cmap="vlag", cbar=False, ax=ax)
        ax.set_title(f"{transform}, lr={lr}")
    return _save(fig, path)


def diversity_chart(frame, path):
    """Histograms of δ and δ̃ for each recorded statistic."""
    measures = list(frame["measure"].unique())
    fig, axes = plt.subplots(1, len(measures), figsize=(5 * len(measures), 4), squeeze=False)
    for ax, measure in zip(axes[0], measures):
        rows = frame[frame["measure"] == measure]
        for statistic, hist in rows.groupby("statistic", sort=False):
            ax.stairs(hist["count"].to_numpy(), list(hist["bin_left"]) + [hist["bin_right"].iloc[-1]], label=statistic)
        ax.set_xlabel(measure)
        ax.set_ylabel("elements")
        ax.legend()
    return _save(fig, path)
