"""Negative-imaginary systems: classification, feedback stability tests,
robust-stabilization conditions for NI uncertainty classes, and synthesis
of destabilizing plants."""

from .classes import ClassKind, UncertaintyClass, class_membership
from .classify import (GridSpec, NIClassification, Verdict, Witness, classify_ni,
                       is_output_strictly_passive, is_positive_real, replay_witness)
from .converse import (CounterexampleRecipe, NecessityStatus, NecessityVerdict, Violation,
                       necessity_check, sufficiency_check, synthesize_destabilizer,
                       verify_counterexample)
from .exceptions import (ComplexSpectrum, ControllerUnstable, EvalAtPole, IllPosed,
                         LimitDiverges, NIError, NotStable, NotSynthesizable, PreconditionViolated,
                         PsiInvalid, SamplerExhausted, SufficiencyCounterexampleFound,
                         VerificationFailed)
from .io import load_system, save_system, system_from_dict, system_to_dict
from .lti import (Polynomial, RationalFunction, StateSpaceRealization, TransferMatrix,
                  close_loop, eval_at, gains, minimal_realization, poles)
from .sampler import SampleSpec, sample_plant, sample_sni_controller, sample_violating_controller
from .stability import (Status, StabilityVerdict, closed_loop_poles, default_psi, lemma2_check,
                        lemma3_check, lemma4_check, oracle_stability, theorem1_check,
                        theorem2_check)

__version__ = "0.1.0"
