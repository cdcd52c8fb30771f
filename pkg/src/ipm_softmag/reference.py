"""Published finite-element results for the reference machine.

Used as calibration targets and as comparison columns in reports. Keys are
(material, topology) with topology "v" or "delta".
"""

from __future__ import annotations

from types import MappingProxyType

# (average torque Nm, torque ripple %, efficiency %)
_ELECTRICAL_ROWS = {
    "Hiperco 50": ((121.59, 8.339, 95.27), (118.94, 10.422, 95.201)),
    "JFE_10JNEX900": ((98.81, 8.7636, 93.871), (97.538, 7.6399, 93.883)),
    "M19 24G": ((103.2, 8.0931, 93.229), (102.32, 7.6974, 93.313)),
    "M235-35A": ((103.41, 8.6299, 94.316), (103.29, 8.0746, 94.349)),
    "M250-35A": ((103.71, 8.7484, 94.309), (103.03, 8.3417, 94.321)),
    "M350-50A": ((101.09, 7.8293, 93.085), (100.38, 7.1591, 93.165)),
    "M400-50A": ((101.34, 9.072, 92.792), (99.479, 7.7737, 92.828)),
    "M470-50A": ((104.51, 8.6362, 93.136), (103.88, 8.2997, 93.234)),
    "M530-65A": ((102.65, 9.0422, 92.982), (101.14, 8.1861, 93.039)),
    "M800-50A": ((101.24, 9.0122, 92.296), (99.67, 7.6873, 92.345)),
    "M1000-65A": ((102.85, 8.6653, 92.076), (101.66, 7.3952, 92.18)),
    "VACOFLUX 50": ((120.12, 7.6989, 93.862), (118.19, 9.7173, 93.929)),
}

# (lamination stress MPa, rotor mass kg, lateral displacement mm)
_MECHANICAL_ROWS = {
    "Hiperco 50": ((1.46, 13.96, 0.00033), (1.07, 13.67, 0.00035)),
    "M235-35A": ((1.37, 13.23, 0.00035), (1.01, 12.98, 0.00037)),
    "M800-50A": ((1.39, 13.23, 0.00031), (1.02, 12.98, 0.00033)),
    "VACOFLUX 50": ((1.49, 13.98, 0.00028), (1.08, 13.68, 0.00029)),
}

# (Young's modulus MPa, yield stress MPa)
PROPERTIES = MappingProxyType({
    "Hiperco 50": (207000.0, 393.0),
    "M235-35A": (185000.0, 460.0),
    "M800-50A": (210000.0, 300.0),
    "VACOFLUX 50": (250000.0, 390.0),
})

# stator lateral natural frequencies [Hz], modes 2..10
NATURAL_FREQUENCIES = MappingProxyType({
    "Hiperco 50": (377.1, 1000.0, 1769.6, 2621.4, 3514.6, 4425.4, 5340.9, 6254.6, 7163.4),
    "M235-35A": (367.0, 973.4, 1722.5, 2551.6, 3421.0, 4307.6, 5198.7, 6088.0, 6972.7),
    "M800-50A": (391.0, 1037.0, 1835.2, 2718.6, 3644.8, 4589.4, 5538.8, 6486.4, 7428.9),
    "VACOFLUX 50": (414.0, 1098.3, 1943.6, 2879.1, 3860.0, 4860.4, 5865.9, 6869.4, 7867.5),
})

TOPOLOGY_KEYS = ("v", "delta")


def _by_cell(rows, names):
    out = {}
    for mat, cells in rows.items():
        for topo, values in zip(TOPOLOGY_KEYS, cells):
            out[(mat, topo)] = dict(zip(names, values))
    return MappingProxyType(out)


ELECTRICAL = _by_cell(_ELECTRICAL_ROWS, ("t_avg", "ripple_pct", "efficiency_pct"))
MECHANICAL = _by_cell(_MECHANICAL_ROWS, ("stress_mpa", "rotor_mass", "displacement_mm"))


def natural_frequency_table(material: str) -> dict[int, float]:
    return dict(zip(range(2, 11), NATURAL_FREQUENCIES[material]))
