"""Machines, accelerator cards and replica lifecycle."""

from __future__ import annotations

from dataclasses import dataclass, field

from slaflow.errors import ConfigError, ContractViolation
from slaflow.replica import CostModel, ReplicaQueue

PROVISIONING = "provisioning"
IDLE = "idle"
BUSY = "busy"
DESTROYED = "destroyed"

_TRANSITIONS = {
    PROVISIONING: {IDLE, DESTROYED},
    IDLE: {BUSY, DESTROYED},
    BUSY: {IDLE},
    DESTROYED: set(),
}


@dataclass(frozen=True)
class MachineSpec:
    machine_id: str
    num_cards: int

    def __post_init__(self):
        if self.num_cards < 1:
            raise ConfigError(f"machine {self.machine_id}: num_cards must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    cards_required: int = 1
    cold_start_time: float = 20.0
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.cards_required < 1 or self.cold_start_time < 0:
            raise ConfigError(f"model {self.model_id}: invalid cards_required/cold_start_time")


DEFAULT_MACHINES = (MachineSpec("m0", 8), MachineSpec("m1", 4))


@dataclass
class ReplicaDescriptor:
    replica_id: int
    model_id: str
    machine_id: str
    cards: tuple[int, ...]
    state: str
    provision_ready_time: float
    last_busy_time: float
    queue: ReplicaQueue = field(default_factory=ReplicaQueue)

    def transition(self, new_state: str):
        if new_state not in _TRANSITIONS[self.state]:
            raise ContractViolation(f"replica {self.replica_id}: {self.state} -> {new_state}")
        self.state = new_state

    @property
    def live(self) -> bool:
        return self.state != DESTROYED


class ClusterState:
    """Card bookkeeping and replica registry. Mutated only by the engine."""

    def __init__(self, machines=DEFAULT_MACHINES, models=()):
        self.machines = {m.machine_id: m for m in machines}
        self.models = {m.model_id: m for m in models}
        self.free_cards = {m.machine_id: list(range(m.num_cards)) for m in machines}
        self.replicas: dict[int, ReplicaDescriptor] = {}
        self._next_id = 0

    def allocate_replica(self, model: ModelSpec | str, now: float,
                         ready: bool = False) -> ReplicaDescriptor | None:
        """Place one replica with best fit on a single machine.

        Returns ``None`` when no machine has enough free cards. With
        ``ready=True`` the replica skips cold start (pre-provisioned).
        """
        if isinstance(model, str):
            model = self.models[model]
        fits = [mid for mid, free in self.free_cards.items() if len(free) >= model.cards_required]
        if not fits:
            return None
        # fewest free cards that still fit; machine id breaks ties
        machine_id = min(fits, key=lambda mid: (len(self.free_cards[mid]), mid))
        free = self.free_cards[machine_id]
        cards, self.free_cards[machine_id] = tuple(free[:model.cards_required]), free[model.cards_required:]
        ready_time = now if ready else now + model.cold_start_time
        rep = ReplicaDescriptor(self._next_id, model.model_id, machine_id, cards,
                                IDLE if ready else PROVISIONING, ready_time, ready_time)
        self.replicas[rep.replica_id] = rep
        self._next_id += 1
        return rep

    def release_replica(self, replica_id: int) -> "ClusterState":
        rep = self.replicas.get(replica_id)
        if rep is None or not rep.live:
            raise KeyError(f"no live replica {replica_id}")
        if rep.state == BUSY or rep.queue.pending:
            raise ContractViolation(f"replica {replica_id} is busy")
        rep.transition(DESTROYED)
        self.free_cards[rep.machine_id] = sorted(self.free_cards[rep.machine_id] + list(rep.cards))
        return self

    def mark_ready(self, replica_id: int):
        self.replicas[replica_id].transition(IDLE)

    def get_available_replicas(self, model_id: str, now: float) -> list[int]:
        return [r.replica_id for r in self.replicas.values()
                if r.model_id == model_id and r.state in (IDLE, BUSY)
                and r.provision_ready_time <= now]

    def existing(self, model_id: str) -> list[ReplicaDescriptor]:
        """Non-destroyed replicas of a model, including those still provisioning."""
        return [r for r in self.replicas.values() if r.model_id == model_id and r.live]

    def idle_replicas(self, model_id: str) -> list[int]:
        return [r.replica_id for r in self.replicas.values()
                if r.model_id == model_id and r.state == IDLE]

    def check_cards(self):
        """Card conservation and placement; raises ``ContractViolation``."""
        used = {mid: [] for mid in self.machines}
        for r in self.replicas.values():
            if r.live:
                used[r.machine_id].extend(r.cards)
        for mid, m in self.machines.items():
            all_cards = sorted(used[mid] + self.free_cards[mid])
            if all_cards != list(range(m.num_cards)):
                raise ContractViolation(f"card bookkeeping broken on {mid}: {all_cards}")
