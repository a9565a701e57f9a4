import matplotlib.pyplot as plt

from xbound_seg.df_classes.loss_log_df import LossLogDf
from xbound_seg.df_classes.sweep_df import SweepDf
from xbound_seg.pydantic_models.metrics_report import SweepPoint


def test_loss_plot_closes_figure(tmp_path):
    records = [
        {"step": i, "seg_loss": 1.0 / i, "map_loss": 0.5 / i, "total": 2.0 / i}
        for i in range(1, 6)
    ]
    df = LossLogDf.from_records(records)
    open_before = plt.get_fignums()
    LossLogDf.make_loss_plot(df, str(tmp_path / "loss.png"))
    assert (tmp_path / "loss.png").is_file()
    assert plt.get_fignums() == open_before


def test_sweep_plot_closes_figure(tmp_path):
    points = [
        SweepPoint(
            name=f"{v}_lam2.0", variant=v, lam=2.0, n_im=2, n_ex=2,
            dice=d, iou=d - 10, assd=1.0, hd95=3.0,
        )
        for v, d in (("baseline", 80.0), ("full", 85.0))
    ]
    df = SweepDf.from_points(points)
    open_before = plt.get_fignums()
    for i in range(3):
        SweepDf.make_sweep_plot(df, str(tmp_path / f"sweep{i}.png"))
    assert plt.get_fignums() == open_before
