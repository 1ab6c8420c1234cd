"""Two-agent symbol emergence: multimodal Dirichlet mixtures coupled by a
Metropolis-Hastings naming game."""

from .distributions import make_rng, trial_seed
from .estimators import InterMDM, MultimodalDirichletMixture
from .inference import gibbs_integrated, mh_exchange, run, run_naming_game
from .metrics import ari, cosine, jsd, kappa, kappa_band, mean_cosine, mean_jsd, welch_t_test
from .model import AgentState, CommunicationType, GameState, ModelConfig
from .synthdata import Dataset, apply_condition, condition_spec, generate_synthetic, load_histogram_dataset

__version__ = "0.1.0"
