"""Epistemic model checking and announcement-protocol verification for
three-player card deal games."""

from .action_update import (
    ActionModel,
    Announcement,
    action_model_from_json,
    action_model_to_json,
    product_update,
    public_announcement,
    validate_action_model,
    verify_update_laws,
)
from .analysis import (
    ImpossibilityReport,
    InequalityWitness,
    LeakReport,
    PairWitness,
    Protocol,
    SolutionReport,
    SweepSpec,
    TwoAnnouncementTrace,
    check_solution,
    find_b_indistinguishable_pair,
    inequality_check,
    lemma2_check,
    run_protocol,
    sample_valid_announcement,
    single_announcement_sweep,
    threshold_l,
    two_announcement_trace,
)
from .epistemic_core import (
    KripkeModel,
    PointedModel,
    Proposition,
    WorldId,
    component_of,
    find_world,
    model_from_json,
    model_from_pairs,
    model_to_json,
    partition_of,
    validate_model,
)
from .errors import (
    CapacityError,
    DelcardsError,
    FormulaSyntaxError,
    InvalidAnnouncementError,
    ProtocolError,
    TruthfulnessError,
    UnknownAgentError,
    UnknownWorldError,
)
from .formula import (
    And,
    Atom,
    Bot,
    Formula,
    Iff,
    Implies,
    Knows,
    Not,
    Or,
    Top,
    conjoin,
    desugar,
    disjoin,
    evaluate,
    extension,
    parse,
    render,
)
from .russian_cards import (
    Deal,
    RcpInstance,
    binomial,
    build_rcp,
    encode_deal,
    hand_announcement,
    hands_of,
    ignorance_goal,
    knows_deal,
    parse_deal_text,
)
