import math

import numpy as np
import pytest
import torch
from oracles import check_gradients

from xbound_seg.errors import DimensionError, ShapeError
from xbound_seg.networks.objectives import (
    LabelPyramid,
    binary_cross_entropy,
    build_label_pyramid,
    dice_loss,
    map_loss,
    total_loss,
)
from xbound_seg.networks.xbound_former import ForwardOutput


def _output(seg_logits, key_maps):
    return ForwardOutput(seg_logits=seg_logits, key_maps=key_maps, embeddings=[])


####################################################################################################
# dice / bce
####################################################################################################


def test_dice_perfect_prediction():
    target = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
    assert dice_loss(target.clone(), target).item() == pytest.approx(0.0)


def test_dice_empty_prediction_smoothing():
    # 1 - (0 + 1) / (0 + 10 + 1)
    target = torch.zeros(4, 4)
    target.view(-1)[:10] = 1
    assert dice_loss(torch.zeros(4, 4), target).item() == pytest.approx(1 - 1 / 11)


def test_dice_half_overlap():
    # |p|=8, |t|=8, overlap 4: 1 - (8 + 1) / (16 + 1)
    pred = torch.zeros(8, 8)
    target = torch.zeros(8, 8)
    pred[0, :8] = 1
    target[0, 4:] = 1
    target[1, :4] = 1
    assert dice_loss(pred, target).item() == pytest.approx(1 - 9 / 17)


def test_dice_batch_averaged():
    target = torch.zeros(2, 1, 4, 4)
    target[0, 0, :2] = 1
    pred = target.clone()
    pred[1] = 1
    # Sample 0 is perfect, sample 1 predicts 16 pixels of an empty target
    expected = 0.5 * (1 - 1 / 17)
    assert dice_loss(pred, target).item() == pytest.approx(expected)


def test_dice_shape_mismatch():
    with pytest.raises(ShapeError):
        dice_loss(torch.zeros(2, 2), torch.zeros(3, 3))


def test_dice_symmetric_for_binary():
    a = (torch.rand(2, 1, 8, 8) > 0.5).float()
    b = (torch.rand(2, 1, 8, 8) > 0.3).float()
    assert dice_loss(a, b).item() == dice_loss(b, a).item()


def test_bce_half_is_ln2():
    pred = torch.full((3, 3), 0.5)
    target = torch.tensor([[0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert binary_cross_entropy(pred, target).item() == pytest.approx(math.log(2), rel=1e-6)


def test_bce_clamped_finite():
    loss = binary_cross_entropy(torch.tensor([0.0, 1.0]), torch.tensor([1.0, 0.0]))
    assert torch.isfinite(loss)


####################################################################################################
# map_loss / total_loss
####################################################################################################


def test_map_loss_exact_prediction_near_zero():
    target = torch.zeros(1, 1, 4, 4)
    target[0, 0, 1, 2] = 1
    pred = target.clamp(1e-7, 1 - 1e-7)
    assert map_loss([[pred, pred]], [target]).item() < 1e-5


def test_map_loss_no_maps_is_zero():
    targets = [torch.zeros(1, 1, 4, 4) for _ in range(4)]
    assert map_loss([[], [], [], []], targets).item() == 0.0


def test_map_loss_scale_count_mismatch():
    with pytest.raises(ShapeError):
        map_loss([[torch.zeros(1, 1, 2, 2)]], [torch.zeros(1, 1, 2, 2)] * 2)


def test_map_loss_two_scales_matches_direct_formula():
    gen = torch.Generator().manual_seed(3)
    targets = [
        (torch.rand(1, 1, 4, 4, generator=gen) > 0.7).double(),
        (torch.rand(1, 1, 2, 2, generator=gen) > 0.5).double(),
    ]
    preds = [
        [torch.rand(1, 1, 4, 4, generator=gen, dtype=torch.float64) for _ in range(2)],
        [torch.rand(1, 1, 2, 2, generator=gen, dtype=torch.float64) for _ in range(2)],
    ]
    per_map = []
    for maps, target in zip(preds, targets):
        for pred in maps:
            terms = []
            for p, t in zip(pred.flatten().tolist(), target.flatten().tolist()):
                p = min(max(p, 1e-7), 1 - 1e-7)
                terms.append(-(t * math.log(p) + (1 - t) * math.log(1 - p)))
            per_map.append(sum(terms) / len(terms))
    expected = sum(per_map) / len(per_map)
    assert abs(map_loss(preds, targets).item() - expected) < 1e-10


def test_total_loss_lambda_zero_is_seg():
    logits = [torch.randn(1, 1, 4, 4) for _ in range(4)]
    targets = [(torch.rand(1, 1, 4, 4) > 0.5).float() for _ in range(4)]
    maps = [[torch.rand(1, 1, 4, 4)] for _ in range(4)]
    total, seg, _ = total_loss(_output(logits, maps), targets, targets, 0.0)
    assert total.item() == pytest.approx(seg.item())


def test_total_loss_arithmetic():
    # Constant logits 0 -> probs 0.5 and maps 0.5 -> BCE ln 2 everywhere
    logits = [torch.zeros(1, 1, 2, 2) for _ in range(4)]
    targets = [torch.ones(1, 1, 2, 2) for _ in range(4)]
    maps = [[torch.full((1, 1, 2, 2), 0.5)] for _ in range(4)]
    total, seg, kp = total_loss(_output(logits, maps), targets, targets, 2.0)
    # 1 - (2 * 2 + 1) / (2 + 4 + 1)
    assert seg.item() == pytest.approx(1 - 5 / 7)
    assert kp.item() == pytest.approx(math.log(2), rel=1e-6)
    assert total.item() == pytest.approx(1 - 5 / 7 + 2 * math.log(2), rel=1e-6)


def test_total_loss_monotone_in_lambda():
    logits = [torch.randn(1, 1, 4, 4) for _ in range(4)]
    targets = [(torch.rand(1, 1, 4, 4) > 0.5).float() for _ in range(4)]
    maps = [[torch.rand(1, 1, 4, 4)] for _ in range(4)]
    totals = [
        total_loss(_output(logits, maps), targets, targets, lam)[0].item()
        for lam in (0.0, 0.5, 1.0, 2.0, 4.0)
    ]
    assert totals == sorted(totals)
    assert totals[0] < totals[-1]


def test_total_loss_full_res_first_head():
    # The side-2 first head upsamples to 8x8 at probability 0.5
    logits = [torch.zeros(1, 1, 2, 2) for _ in range(4)]
    targets = [torch.ones(1, 1, 2, 2) for _ in range(4)]
    maps = [[] for _ in range(4)]
    full = torch.ones(1, 1, 8, 8)
    _, seg, _ = total_loss(_output(logits, maps), targets, targets, 2.0, full)
    # 1 - (2 * 32 + 1) / (32 + 64 + 1) for the first head
    expected = ((1 - 65 / 97) + 3 * (1 - 5 / 7)) / 4
    assert seg.item() == pytest.approx(expected, rel=1e-6)
    with pytest.raises(ShapeError):
        total_loss(_output(logits, maps), targets, targets, 2.0, torch.ones(1, 1, 16, 16))


def test_total_loss_negative_lambda():
    logits = [torch.zeros(1, 1, 2, 2) for _ in range(4)]
    with pytest.raises(ValueError):
        total_loss(_output(logits, [[]] * 4), logits, logits, -1.0)


def test_total_loss_gradient_wrt_logits():
    logits = [torch.randn(1, 1, 4, 4, dtype=torch.float64, requires_grad=True) for _ in range(4)]
    maps = [[torch.rand(1, 1, 4, 4, dtype=torch.float64, requires_grad=True)] for _ in range(4)]
    seg_t = [(torch.rand(1, 1, 4, 4) > 0.5).double() for _ in range(4)]
    kp_t = [(torch.rand(1, 1, 4, 4) > 0.8).double() for _ in range(4)]

    def fn():
        return total_loss(_output(logits, maps), seg_t, kp_t, 0.5)[0]

    check_gradients(fn, logits + [m for scale in maps for m in scale])


def test_total_loss_full_res_gradient():
    logits = [torch.randn(1, 1, n, n, dtype=torch.float64, requires_grad=True) for n in (4, 2, 2, 2)]
    maps = [[] for _ in range(4)]
    seg_t = [(torch.rand(1, 1, n, n) > 0.5).double() for n in (4, 2, 2, 2)]
    full = (torch.rand(1, 1, 16, 16) > 0.5).double()

    def fn():
        return total_loss(_output(logits, maps), seg_t, seg_t, 1.0, full)[0]

    check_gradients(fn, logits)


class _DropSmallGradient(torch.autograd.Function):
    """`5e-7 * x` whose backward pass forgets the gradient."""

    @staticmethod
    def forward(ctx, x):
        return 5e-7 * x

    @staticmethod
    def backward(ctx, grad):
        return torch.zeros_like(grad)


def test_gradient_check_flags_dropped_small_gradient():
    x = torch.randn(4, dtype=torch.float64, requires_grad=True)
    check_gradients(lambda: (5e-7 * x).sum(), [x])
    with pytest.raises(AssertionError):
        check_gradients(lambda: _DropSmallGradient.apply(x).sum(), [x])


####################################################################################################
# label pyramid
####################################################################################################


def test_label_pyramid_all_ones():
    pyramid = build_label_pyramid(np.ones((64, 64), dtype=np.uint8), 2, 30)
    assert [m.shape for m in pyramid.seg] == [(16, 16), (8, 8), (4, 4), (2, 2)]
    assert all(m.all() for m in pyramid.seg)
    assert not any(m.any() for m in pyramid.keypoints)


def test_label_pyramid_empty():
    pyramid = build_label_pyramid(np.zeros((64, 64), dtype=np.uint8), 2, 30)
    assert not any(m.any() for m in pyramid.seg)
    assert not any(m.any() for m in pyramid.keypoints)


def test_label_pyramid_square(square_mask):
    pyramid = build_label_pyramid(square_mask, 2, 5)
    assert sorted(zip(*np.nonzero(pyramid.keypoints[0]))) == [(5, 5), (5, 9), (9, 5), (9, 9)]
    assert pyramid.seg[0][5:10, 5:10].all()
    assert pyramid.seg[0].sum() == 25


def test_label_pyramid_samples_cell_centres():
    mask = np.zeros((64, 64), dtype=np.uint8)
    mask[2, 6] = 1
    pyramid = build_label_pyramid(mask, 2, 5)
    assert pyramid.seg[0][0, 1] == 1 and pyramid.seg[0].sum() == 1
    mask[:] = 0
    mask[0, 0] = 1
    assert not build_label_pyramid(mask, 2, 5).seg[0].any()


def test_label_pyramid_to_tensors(square_mask):
    pyramid = build_label_pyramid(square_mask, 2, 5)
    seg, kp = LabelPyramid.to_tensors([pyramid, pyramid])
    assert [tuple(t.shape) for t in seg] == [(2, 1, 16, 16), (2, 1, 8, 8), (2, 1, 4, 4), (2, 1, 2, 2)]
    assert kp[0].dtype == torch.float32
    assert kp[0].sum().item() == 8


def test_label_pyramid_indivisible():
    with pytest.raises(DimensionError):
        build_label_pyramid(np.zeros((48, 48), dtype=np.uint8), 2, 5)
