from .base import SchedulePolicy
from .random_policy import RandomPolicy
from .round_robin import RoundRobinPolicy
from .script import ScriptPolicy, make_policy

__all__ = ["SchedulePolicy", "RandomPolicy", "RoundRobinPolicy", "ScriptPolicy", "make_policy"]
