"""Gnuplot emitters.

The CSV traces are the single source of truth for results; these helpers
derive plot-ready .dat files (iterations, causal moving averages) and
matching gnuplot command files from them. Nothing is recomputed from the
simulation state, so a plot can always be regenerated from archived CSVs.
"""

import math
import os

from .harness import moving_average, read_trace_csv

__all__ = ["emit_run_plots", "emit_sweep_plots"]

_COLORS = {"nlms": "#1f6fb4", "penalty": "#c44e52", "riemannian": "#2a9d54"}


def _dat_path(out_dir, name):
    return os.path.join(out_dir, name)


def emit_run_plots(trace_csvs, out_dir, window=100, stem="run"):
    """Write <stem>_<algo>.dat files and a <stem>.gp command file.

    trace_csvs maps algorithm name to a trace CSV path. Each .dat has
    columns: n, moving-average P_red in dB, moving-average radiated
    power, radiation target (empty when not applicable).
    """
    os.makedirs(out_dir, exist_ok=True)
    dats = {}
    for name, path in sorted(trace_csvs.items()):
        cols = read_trace_csv(path)
        ma_p = moving_average(cols["p_red"], window)
        ma_e = moving_average(cols["epsilon_n"], window)
        dat = _dat_path(out_dir, f"{stem}_{name}.dat")
        with open(dat, "w") as fh:
            fh.write("# n  p_red_db_ma  epsilon_ma  epsilon_target\n")
            for i, n in enumerate(cols["n"]):
                tgt = cols["epsilon_target"][i]
                tgt_s = "" if math.isnan(tgt) else repr(float(tgt))
                fh.write(f"{n} {10.0 * math.log10(ma_p[i])} {ma_e[i]} {tgt_s}\n")
        dats[name] = os.path.basename(dat)

    gp = _dat_path(out_dir, f"{stem}.gp")
    with open(gp, "w") as fh:
        fh.write("set terminal pngcairo size 900,700\n")
        fh.write(f"set output '{stem}.png'\n")
        fh.write("set multiplot layout 2,1\n")
        fh.write("set xlabel 'iteration'\n")
        fh.write("set ylabel 'P_{red} [dB]'\n")
        plots = ", ".join(
            f"'{d}' using 1:2 with lines lc rgb '{_COLORS.get(a, '#444444')}' "
            f"title '{a}'" for a, d in sorted(dats.items()))
        fh.write(f"plot {plots}\n")
        fh.write("set ylabel 'radiated power'\n")
        fh.write("set format y '%.1e'\n")
        plots = ", ".join(
            f"'{d}' using 1:3 with lines lc rgb '{_COLORS.get(a, '#444444')}' "
            f"title '{a}'" for a, d in sorted(dats.items()))
        fh.write(f"plot {plots}\n")
        fh.write("unset multiplot\n")
    return gp


def emit_sweep_plots(rows, out_dir, stem="sweep"):
    """Write per-algorithm .dat files and a .gp file for sweep summaries.

    `rows` are the sweep summary dicts (frequency_hz, algorithm,
    p_red_db_mean100, epsilon_mean100, ...).
    """
    os.makedirs(out_dir, exist_ok=True)
    algos = sorted({r["algorithm"] for r in rows})
    dats = {}
    for a in algos:
        dat = _dat_path(out_dir, f"{stem}_{a}.dat")
        with open(dat, "w") as fh:
            fh.write("# frequency_hz  p_red_db_mean100  epsilon_mean100\n")
            for r in sorted((r for r in rows if r["algorithm"] == a),
                            key=lambda r: r["frequency_hz"]):
                fh.write(f"{r['frequency_hz']} {r['p_red_db_mean100']} "
                         f"{r['epsilon_mean100']}\n")
        dats[a] = os.path.basename(dat)

    gp = _dat_path(out_dir, f"{stem}.gp")
    with open(gp, "w") as fh:
        fh.write("set terminal pngcairo size 900,700\n")
        fh.write(f"set output '{stem}.png'\n")
        fh.write("set multiplot layout 2,1\n")
        fh.write("set xlabel 'frequency [Hz]'\n")
        fh.write("set ylabel 'P_{red} [dB]'\n")
        plots = ", ".join(
            f"'{d}' using 1:2 with linespoints lc rgb "
            f"'{_COLORS.get(a, '#444444')}' title '{a}'"
            for a, d in sorted(dats.items()))
        fh.write(f"plot {plots}\n")
        fh.write("set ylabel 'radiated power'\n")
        fh.write("set format y '%.1e'\n")
        plots = ", ".join(
            f"'{d}' using 1:3 with linespoints lc rgb "
            f"'{_COLORS.get(a, '#444444')}' title '{a}'"
            for a, d in sorted(dats.items()))
        fh.write(f"plot {plots}\n")
        fh.write("unset multiplot\n")
    return gp
