"""Direct-revelation prediction markets over finite state spaces.

Build a world model (states, prior, event, per-agent signals), pay agents
for revealed information with proper-scoring-rule mechanisms, convert report
profiles to cooperative games, audit incentive properties by brute force,
and simulate the two-tier information/probability market protocol.
"""

from .audit import (
    ALL_SUBSETS,
    SIGNAL_SUPPORT,
    AuditVerdict,
    ReportSpace,
    audit_ex_interim,
    audit_ex_post,
    check_decomposition,
    check_individual_agent_property,
    check_relative_dummy,
    lemma1_meta,
)
from .coopgame import (
    CharacteristicGame,
    PotentialPair,
    PreCharacteristic,
    ShapleyAllocation,
    marginal_vector,
    pre_characteristic,
    realize,
    shapley,
    to_characteristic,
    truthful_reports,
)
from .errors import (
    DomainError,
    InfoMechError,
    NotRealizable,
    ScenarioFormatError,
    TooLargeToEnumerate,
    TooManyAgentsForExact,
    ZeroProbabilityInformation,
    ZeroProbabilitySignal,
)
from .market_sim import (
    FixedSequencePolicy,
    InformationScript,
    ManipulationReport,
    MarketTranscript,
    NoisyPolicy,
    PosteriorPolicy,
    demo_manipulation,
    run_figure1,
    run_msr,
)
from .mechanisms import (
    GroupRewarding,
    Individual,
    Marginal,
    Mechanism,
    PaymentVector,
    Pivotal,
    ShapleyExact,
    ShapleySampled,
    expected_payment,
    parse_mechanism_spec,
    pay,
    pay_group,
    pay_individual,
    pay_marginal,
    pay_pivotal,
    pay_shapley,
)
from .scoring import (
    LOGARITHMIC,
    QUADRATIC,
    ScoringRule,
    expected_score,
    parse_rule_spec,
    score,
    verify_properness,
)
from .state_model import (
    ConsistencyReport,
    ConsistencyWitness,
    Deterministic,
    Event,
    Scenario,
    SignalProfile,
    StateSpace,
    Stochastic,
    check_consistency,
    dump_scenario,
    lift_to_deterministic,
    load_scenario,
    posterior,
    scenario_from_dict,
    scenario_to_dict,
    signal_posterior,
)

__version__ = "0.1.0"
