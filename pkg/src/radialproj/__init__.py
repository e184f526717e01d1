"""Radial projection spacing statistics of planar point sets.

Generates circular patches of the integer lattice, Poisson realizations,
cyclotomic model sets and substitution tilings; filters them down to the
points visible from a reference point (exact algebraic tests cross-checked
against a geometric oracle); and studies the distribution of normalized
angular spacings, including closed-form references and tail fits.
"""

from .analysis import (C3, C4, T_GAP, T_KNEE, CompareMetrics, TailFit, compare,
                       exponential_cdf, exponential_density, gap_size,
                       lattice_gap_cdf, lattice_gap_density,
                       lattice_tail_density, tail_fit, tail_fit_from_bins)
from .cyclo import (CYCLO5, CYCLO8, CYCLO12, CYCLOTOMIC, CycloTag, ModulePoint,
                    Window, module_point)
from .errors import IntegrityError, ResourceError, UsageError
from .generators import (CMS_NAMES, CmsSpec, cms_spec, gen_cms, gen_lattice,
                         gen_poisson)
from .pipeline import (AngularProfile, GapList, SpacingHistogram, histogram,
                       merge_histograms, normalized_gaps, project_angles,
                       run_pipeline)
from .points import PointSet
from .rings import RINGS, SQRT2, SQRT3, TAU, QuadInt, canonical_associate, gcd
from .substitution import (SubstitutionRule, builtin_rule_names,
                           gen_substitution, load_rule, parse_rule_text)
from .visibility import visible, visible_brute_force, visible_cms, visible_lattice

__version__ = "0.1.0"
