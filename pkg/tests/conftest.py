import pytest

from collabsim.world import Layout, Point, Task, TaskKind


@pytest.fixture
def line_layout() -> Layout:
    """Human and robot facing each other with a joint task between them."""
    return Layout(
        tasks=(
            Task(0, Point(1.0, 10.0), TaskKind.ONE_AGENT),
            Task(1, Point(19.0, 10.0), TaskKind.ONE_AGENT),
            Task(2, Point(10.0, 10.0), TaskKind.JOINT),
        ),
        human_start=Point(0.0, 10.0),
        robot_start=Point(20.0, 10.0),
    )


@pytest.fixture
def two_joint_layout() -> Layout:
    """Deadlock-prone: the joints are equidistant from the human, so its
    soft-max pick is a coin flip against whichever order the plan chose."""
    return Layout(
        tasks=(
            Task(0, Point(5.0, 10.0), TaskKind.JOINT),
            Task(1, Point(15.0, 10.0), TaskKind.JOINT),
            Task(2, Point(10.0, 18.0), TaskKind.ONE_AGENT),
        ),
        human_start=Point(10.0, 14.0),
        robot_start=Point(10.0, 2.0),
    )
