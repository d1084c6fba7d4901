"""One-pass evaluation over a small on-disk benchmark.

Writes two generated sequences in the standard layout (img/ directory
plus a 1-based ground-truth file), evaluates the tracker on both, and
prints the precision/success summary that the ``patchgraph eval``
command would report.  Plot-ready CSV curves land next to the report.
"""

import os
import tempfile

from patchgraph import PatchGraphTracker
from patchgraph.bench import (emit_plot_data, group_by_attribute,
                              load_otb_sequence, run_ope)
from patchgraph.config import RunConfig
from patchgraph.synthetic import (make_linear_sequence, make_static_sequence,
                                  write_otb_sequence)


def factory(frame0, box0):
    tracker = PatchGraphTracker(**RunConfig().tracker_kwargs())
    tracker.start(frame0, box0)
    return tracker


def main():
    root = tempfile.mkdtemp(prefix="patchgraph_bench_")

    frames, boxes = make_linear_sequence(n_frames=40, occlusion=(18, 28))
    write_otb_sequence(os.path.join(root, "drift"), frames, boxes,
                       attributes=("OCC",))
    frames, boxes = make_static_sequence(n_frames=20)
    write_otb_sequence(os.path.join(root, "still"), frames, boxes)

    reports = []
    for name in ("drift", "still"):
        spec = load_otb_sequence(os.path.join(root, name))
        print(f"{spec.name}: {spec.n_frames} frames, "
              f"attributes {list(spec.attributes) or 'none'}")
        records, report = run_ope(spec, factory)
        reports.append(report)
        print(f"  PR(20) {report['pr20']:.3f}  AUC {report['sr_auc']:.3f}  "
              f"SR(0.5) {report['sr_at_05']:.3f}  {report['fps']:.1f} fps")
        ppath, spath = emit_plot_data(report, root, prefix=f"{name}_")
        print(f"  curves: {os.path.basename(ppath)}, "
              f"{os.path.basename(spath)}")

    occluded = group_by_attribute(reports, "OCC")
    print(f"occlusion subset: {occluded['count']} sequence(s), "
          f"PR(20) {occluded['pr20']:.3f}")
    print(f"outputs under {root}")


if __name__ == "__main__":
    main()
