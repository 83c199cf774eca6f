from app.games.builders import (
    MATCHING_PENNIES,
    build_cycle_chain,
    dummy_player_game,
    fig1_gda_game,
    fig1_replicator_game,
    fig1_schedule,
    nonperiodic_game,
    prop2_game,
    shifting_equilibrium_game,
    sine_mp_game,
    two_player_game,
)
from app.games.loader import dump_game, load_game
from app.games.models import BilinearGame, Edge, PolymatrixGame
from app.games.modulation import Modulation, ModulationKind
from app.games.schedule import PayoffSchedule, Segment, eval_payoff
from app.games.validation import (
    check_game,
    equilibrium_residual,
    game_value,
    period_average_value,
    utility,
    zero_sum_residual,
)
