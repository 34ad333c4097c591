"""Design constants: every tolerance and truncation default in one table.

Anything numeric that a report or test relies on lives here, so provenance
blocks can echo the exact configuration that produced a value.
"""

# Best known exponents toward the Ramanujan and level-aspect Lindelof
# approximations; used only for reported bound slopes, never asserted tight.
RAMANUJAN_THETA = 7.0 / 64.0
LINDELOF_DELTA = 103.0 / 512.0

TOLERANCES = {
    # cutoff machinery
    "cutoff_quadrature_rel": 1e-10,     # build-time self check (node doubling)
    "cutoff_interp_abs": 1e-8,          # spline interpolation error budget
    "cutoff_grid_per_decade": 512,
    # approximate functional equation truncation: keep terms with
    # m^2 n <= AFE_A * Y * (log Y + AFE_B)
    "afe_truncation_A": 30.0,
    "afe_truncation_B": 10.0,
    "afe_tail_rel": 1e-8,
    # dirichlet L values
    "dirichlet_L_abs": 1e-8,
    # symmetric-square pole diagnostic: relative X vs 2X disagreement
    "sym2_pole_rel": 1e-4,
    "sym2_default_cutoff": 200_000,
    "sym2_offset": 1e-3,                # s0 = 1 + offset when the pole trips
    # eigenvalue validation
    "deligne_slack": 1e-9,
    # route comparison
    "route_gap_rel": 1e-3,
    # b=0 Mellin identity
    "b0_gap_rel": 1e-4,
}

# Defaults for the quadrature along Re(s) = 2 (cutoff functions) and the
# Whittaker contour. Panel width is in t-units; 16-point Gauss-Legendre per
# panel resolves ~8 radians of oscillation comfortably.
QUADRATURE = {
    "contour_sigma": 2.0,
    "panel_width": 0.25,
    "panel_points": 16,
    "max_height": 64.0,
    "whittaker_panel_width": 0.25,
    "whittaker_max_height": 96.0,
}

# log-spaced cache range for cutoff functions (spec pre-range 1e-12..1e12;
# values decay below double precision long before the right edge).
CUTOFF_GRID_YMIN = 1e-13
CUTOFF_GRID_YMAX = 2e3
