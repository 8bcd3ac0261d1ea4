"""Expected-update check: averaging per-augmentation gradients vs the averaged-loss gradient."""

import numpy as np

from .. import likelihood as lik
from .. import numcore
from ..errors import ModeError

__all__ = ["expected_update_equivalence_check"]


def expected_update_equivalence_check(model, w, x, y, orbit):
    """Norm of ``mean_k grad log softmax_y f(a_k(x)) - grad L_loss(y)``.

    The left side takes one gradient per augmentation, as a single-sample
    update would; the right side differentiates the enumerated averaged loss.
    """
    if not orbit.is_finite:
        raise ModeError("the equivalence check enumerates a finite orbit")
    views = orbit.enumerate_batch(np.asarray(x, dtype=np.float64)[None])[0]
    per_aug = np.zeros(model.n_params)
    for v in views:
        def objective(logits):
            values, dl = lik.reduce_logits("noaug", logits[:, None, :], [y])
            return values.sum(), dl[:, 0, :]

        per_aug += numcore.grad_objective(model, w, v[None], objective)[1]
    per_aug /= len(views)
    spec = lik.LikelihoodSpec("loss_avg", "exact_finite")
    avg = lik.batch_loglik(model, w, np.asarray(x)[None], [y], orbit, spec, with_grad=True)["grad"]
    return float(np.linalg.norm(per_aug - avg))
