"""SVG figures for the report stage. Presentation only; the CSVs are the record."""
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so that re-runs write identical files
plt.rcParams["svg.hashsalt"] = "perceptxai"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_profiles(matrix_csv, path, title=""):
    """Mean DC-normalized profile per class from a profile matrix CSV."""
    with open(matrix_csv, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    by_class = {0: [], 1: []}
    for row in rows:
        label = 1 if row[0].split("/")[-1].startswith("c1_") else 0
        by_class[label].append([float(v) for v in row[1:]])
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, color in ((1, "tab:red"), (0, "tab:blue")):
        if by_class[label]:
            mean = np.mean(by_class[label], axis=0)
            ax.semilogy(np.arange(len(mean)), np.maximum(mean, 1e-12), color=color, label=f"class {label}")
    ax.set_xlabel("radial frequency bin")
    ax.set_ylabel("mean amplitude / DC")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_perturbation(curve, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = np.asarray(curve["k"])
    ax.plot(ks, curve["acc_topk"], "o-", label="top-k removal")
    ax.plot(ks, curve["acc_random"], "s--", label="random removal")
    ax.set_xlabel("fraction of pixels removed")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend()
    _save(fig, path)
