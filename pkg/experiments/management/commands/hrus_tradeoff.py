from ...commands import TradeoffCommand
from ...services import TradeoffService


class Command(TradeoffCommand):
    help = "Maximum hybrid RUS trial time versus photon loss for each photon count n."

    photon_counts = True

    def compute(self, section, losses, border):
        return TradeoffService.hrus_tradeoff(
            section["n_values"], section["k_values"], losses, border
        )
