import pytest

from maskkd.config import DistillConfig


@pytest.fixture(scope="session")
def tiny_cfg():
    return DistillConfig(teacher_channels=8, teacher_depth=2, student_channels=4, student_depth=1,
                         teacher_n_train=32, teacher_epochs=2, n_train=16, n_val=16, epochs=3,
                         snapshot_epochs="1,3", overlap_images=4)


@pytest.fixture(scope="session")
def tiny_teacher(tiny_cfg):
    from maskkd.harness import train_teacher

    teacher, _ = train_teacher(tiny_cfg)
    return teacher
