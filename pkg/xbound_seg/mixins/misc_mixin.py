import random

import numpy as np
import torch


class MiscMixin:
    ###############################################################################################
    # Helper funcs (e.g. enum handling)
    ###############################################################################################

    @staticmethod
    def enum2tuple(my_enum):
        """
        Useful helper function to convert an Enum to a list of its values.
        Used in `check_df` and `init_df` functions.
        """
        return tuple(i.value for i in my_enum)

    @staticmethod
    def set_seed(seed: int) -> None:
        """
        Seeds python, numpy and torch, and asks torch for deterministic kernels.
        """
        random.seed(seed)
        np.random.seed(seed)
        torch.manual_seed(seed)
        torch.use_deterministic_algorithms(True, warn_only=True)
