"""Polygonal dynamics on the complex projective line.

Staircase cross-ratio flips, flat cross-ratio dynamics and the leapfrog
map, their scaling symmetries, and the infinitesimal monodromy whose
eigenlines predict where polygons collapse.
"""

from .errors import (
    CoincidentAxis,
    DegenerateCrossRatio,
    DegenerateEdge,
    DegenerateError,
    DegeneratePolygon,
    DegenerateReconstruction,
    DegenerateStep,
    DegenerateTriple,
    ExcludedParameter,
    NoCyclicPlacement,
    ParabolicStep,
    PolyDynError,
    ZeroPolynomial,
)
from .projgeom import (
    INF,
    ONE,
    ZERO,
    Mobius,
    MobiusClass,
    ProjPoint,
    chordal_distance,
    classify,
    conjugation_map,
    cross_ratio,
    mobius_apply,
    mobius_from_triples,
    solve_cross_ratio,
    spreading_map,
)
from .polygon import (
    TwistedPolygon,
    coords,
    is_closed,
    monodromy_product,
    normalize_chart,
    polygon_from_json,
    polygon_to_json,
    random_closed_polygon,
    reconstruct,
)
from .dynamics import (
    FlatState,
    FlipWord,
    LeapfrogState,
    StaircaseState,
    apply_word,
    flat_step,
    leapfrog_step,
    leapfrog_step_back,
    staircase_flip,
)
from .scaling import SystemSpec, deform_family, log_derivative, scale
from .invariants import (
    CollapseCandidates,
    InfinitesimalMonodromy,
    chi_roots,
    finite_diff_monodromy,
    g_invariant,
    ijk_transform,
    infinitesimal_monodromy,
    omega_eval,
    predict_collapse,
)
from .harness import (
    CollapseReport,
    ExperimentConfig,
    Orbit,
    relations_suite,
    run_collapse,
    scan_conjecture,
    special_staircase,
)

__version__ = "0.1.0"
