"""Sweep the fiber-radius parameter of the circle-times-cylinder family and
track the biharmonic normal residual together with the codimension-2
predicate trace A_{xi1}^2 + |T|^2 - m.

On the sphere-side family (eps = +1) both quantities vanish only where the
whole mean curvature vector vanishes (a^2 = 1/2, the minimal member), so
the family contains no properly biharmonic chart; on the hyperbolic side
the residual is bounded away from zero on the entire parameter range."""

from prodsub.scene import format_scan_table, scan_parameter


def scene(eps, a2):
    return {
        "ambient": {"epsilon": eps, "n": 4},
        "immersion": {
            "gallery": {"kind": "theorem1", "a2": a2, "phi_kind": "geodesic_cylinder"}
        },
        "sampling": {"mode": "grid", "grid": [2, 2, 2], "seed": 1},
        "checks": ["biharmonic_normal"],
    }


print("eps = +1, a^2 in [0.3, 0.9]:")
scan = scan_parameter(scene(1, 0.6), "a2", 0.3, 0.9, 13, "biharmonic_normal")
print(format_scan_table(scan))

print("eps = -1, a^2 in [1.3, 1.9] (the valid window needs |a| > 1):")
scan = scan_parameter(scene(-1, 1.5), "a2", 1.3, 1.9, 13, "biharmonic_normal")
print(format_scan_table(scan))
