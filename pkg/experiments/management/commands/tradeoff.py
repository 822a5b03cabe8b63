from ...commands import TradeoffCommand
from ...services import TradeoffService


class Command(TradeoffCommand):
    help = "Maximum RUS trial time versus photon loss, per trial budget k and optimized over k."

    def compute(self, section, losses, border):
        return TradeoffService.loss_coherence_tradeoff(section["k_values"], losses, border)
