"""Deterministic tick-based experiment engine.

One tick is one simulated second. Each run walks the same phases: the
overlay bootstraps until every node is reachable (a star is connected
immediately; partial-view nodes join one per tick through a contact),
then clients generate a fixed impression workload, wait for every
replica to absorb every event, flush metrics, and shut down. Phases
one through four are gated by a workflow barrier replica on every node,
so no node acts on a phase before its own replica shows the previous
phase complete everywhere.

World evolution is a pure function of the configuration: node-local
generators are seeded from (experiment seed, node id), message latency
from (seed, sender, receiver), so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, fields

from . import scenario
from .dataflow import Store
from .dissemination import ACK, MEMBERSHIP, Disseminator, Payload
from .lattice import Workflow, gcounter_value, join
from .overlay import (
    HpvParams,
    MembershipMsg,
    MembershipView,
    build_star,
    diameter,
    hpv_handle,
    hpv_on_failure,
    is_single_component,
    maintain_active,
    make_shuffle,
    rejoin_if_isolated,
    OverlayError,
)
from .workflow import is_task_complete, mark_complete, wcrdt_new

WORKFLOW_VAR = "workflow"
TASK_EVENTS, TASK_CONVERGE, TASK_AGGREGATE, TASK_SHUTDOWN = range(4)
TASK_COUNT = 4

SERVER_ID = "s0"


class ConfigError(ValueError):
    pass


class PhaseTimeout(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    clients: int
    topology: str = "hyparview"  # star | hyparview
    mode: str = "delta"  # state | delta
    impression_interval: int = 10
    propagation_interval: int = 5
    duration: int = 1800
    ads: int = 10
    contracts_per_ad: int = 1
    threshold: int = 500
    impressions_per_client: int | None = None
    latency_min: int = 1
    latency_max: int = 1
    churn_per_minute: float = 0.0
    seed: int = 1
    client_triggers: bool = False
    fallback_after: int = 3
    timeout_factor: int = 3
    hpv: HpvParams = field(default_factory=HpvParams)

    @property
    def ipc(self) -> int:
        if self.impressions_per_client is not None:
            return self.impressions_per_client
        return self.duration // self.impression_interval

    def validate(self) -> None:
        if self.clients < 1:
            raise ConfigError("need at least one client")
        if self.topology not in ("star", "hyparview"):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.mode not in ("state", "delta"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.topology == "star" and self.mode == "delta":
            raise ConfigError(
                "star topology supports state mode only: the central server "
                "cannot buffer per-client delta logs for the whole system"
            )
        if self.topology == "star" and self.churn_per_minute > 0:
            raise ConfigError("churn requires the hyparview topology (the star has no repair path)")
        if min(self.impression_interval, self.propagation_interval, self.duration) < 1:
            raise ConfigError("intervals and duration must be positive")
        if self.ads < 1 or self.contracts_per_ad < 0 or self.threshold < 1:
            raise ConfigError("ads must be >= 1, contracts >= 0, threshold >= 1")
        if self.ipc < 1:
            raise ConfigError("impressions per client must be >= 1")
        if self.ipc * self.impression_interval > self.duration:
            raise ConfigError("workload does not fit: impressions x interval exceeds duration")
        if not 1 <= self.latency_min <= self.latency_max:
            raise ConfigError("latency bounds must satisfy 1 <= min <= max")
        if not 0.0 <= self.churn_per_minute < 1.0:
            raise ConfigError("churn per minute must be in [0, 1)")
        self.hpv.validate()

    def key_values(self) -> list[tuple[str, object]]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "hpv":
                v = ";".join(f"{h.name}={getattr(v, h.name)}" for h in fields(v))
            out.append((f.name, v))
        return out


def client_ids(count: int) -> list[str]:
    return [f"c{i:04d}" for i in range(count)]


def _stable_seed(*parts) -> int:
    text = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


@dataclass
class RunReport:
    config: ExperimentConfig
    ticks_run: int
    start_tick: int
    last_event_tick: int
    convergence_tick: int | None
    inband_convergence_tick: int | None
    done_tick: int
    total_instrumented_bytes: int
    total_control_bytes: int
    payloads_sent: int
    diameter_samples: list[tuple[int, int]]
    ad_counts: dict[str, int]
    spillover_count: int
    impressions_total: int
    retirements: list[tuple[int, str, str, int]]
    mark_ticks: dict[int, dict[str, int]]
    first_impression_tick: int | None
    phase_first_row_tick: dict[int, int]
    max_buffer_len: int
    churn_kills: list[tuple[int, str]]
    dropped_messages: int
    unknown_acks: int

    def all_marked_tick(self, task: int) -> int:
        return max(self.mark_ticks[task].values())

    def counters_total(self) -> int:
        return sum(self.ad_counts.values()) + self.spillover_count


class SimNode:
    __slots__ = (
        "id", "role", "rng", "store", "dissem", "view", "generation",
        "impressions_done", "join_tick", "joined", "mark_ticks",
        "task_cache", "done_tick", "apply", "value_cache",
    )

    def __init__(self, node_id: str, role: str, rng: random.Random,
                 store: Store, dissem: Disseminator, view: MembershipView):
        self.id = node_id
        self.role = role
        self.rng = rng
        self.store = store
        self.dissem = dissem
        self.view = view
        self.generation = 0
        self.impressions_done = 0
        self.join_tick: int | None = None
        self.joined = False
        self.mark_ticks: dict[int, int] = {}
        self.task_cache: tuple[int, int] = (-1, 0)
        self.done_tick: int | None = None
        self.apply = None
        self.value_cache: dict[str, tuple[int, int]] = {}


class World:
    def __init__(self, config: ExperimentConfig, metrics_sink=None, overlay_sink=None):
        config.validate()
        self.config = config
        self.sink = metrics_sink
        self.overlay_sink = overlay_sink
        self.tick = 0
        self.msg_seq = 0
        self.queue: dict[int, list[tuple[int, int, Payload]]] = {}
        self.started = False
        self.start_tick: int | None = None
        self.last_event_tick = 0
        self.convergence_tick: int | None = None
        self.total_instrumented = 0
        self.total_control = 0
        self.payloads_sent = 0
        self.dropped = 0
        self.unknown_acks = 0
        self.diameter_samples: list[tuple[int, int]] = []
        self.retirements: list[tuple[int, str, str, int]] = []
        self.mark_ticks: dict[int, dict[str, int]] = {k: {} for k in range(TASK_COUNT)}
        self.first_impression_tick: int | None = None
        self.impression_count = 0
        self.phase_first_row_tick: dict[int, int] = {}
        self.max_buffer_len = 0
        self.churn_kills: list[tuple[int, str]] = []
        self.churn_rng = random.Random(_stable_seed(config.seed, "churn"))
        self.pair_rngs: dict[tuple[str, str], random.Random] = {}

        self.expected_total = config.clients * config.ipc
        self.ads = scenario.make_ads(config.ads, config.threshold)
        self.contracts = scenario.make_contracts(self.ads, config.contracts_per_ad)
        self.counter_vars = [a.counter_variable for a in self.ads] + [scenario.SPILLOVER_VAR]

        ids = client_ids(config.clients) + [SERVER_ID]
        self.expected = set(ids)
        self.directory = set(ids)
        self.nodes: dict[str, SimNode] = {}
        for node_id in ids:
            self._build_node(node_id, "server" if node_id == SERVER_ID else "client")
        self.order = [self.nodes[i] for i in sorted(self.nodes)]
        self.clients = [n for n in self.order if n.role == "client"]

        if config.topology == "star":
            views = build_star(SERVER_ID, set(ids) - {SERVER_ID})
            for node_id, view in views.items():
                self.nodes[node_id].view = view
            for node in self.order:
                node.joined = True
        else:
            self.nodes[SERVER_ID].joined = True
            order = sorted(set(ids) - {SERVER_ID})
            random.Random(_stable_seed(config.seed, "bootstrap")).shuffle(order)
            for offset, node_id in enumerate(order):
                self.nodes[node_id].join_tick = offset + 1

        server = self.nodes[SERVER_ID]
        scenario.populate(server.apply, SERVER_ID, self.ads, self.contracts)
        self._register_triggers(server)
        if config.client_triggers:
            for node in self.clients:
                self._register_triggers(node)

        bootstrap_allowance = len(ids) + 100
        self.timeout_ticks = config.timeout_factor * (config.duration + bootstrap_allowance)

    def _build_node(self, node_id: str, role: str) -> SimNode:
        store = Store()
        scenario.initialize(store, self.ads, self.contracts)
        store.declare(WORKFLOW_VAR, Workflow, initial=wcrdt_new(TASK_COUNT))
        dissem = Disseminator(
            owner=node_id,
            store=store,
            mode=self.config.mode,
            fallback_after=self.config.fallback_after,
            uninstrumented=frozenset({WORKFLOW_VAR}),
        )
        rng = random.Random(_stable_seed(self.config.seed, node_id))
        node = SimNode(node_id, role, rng, store, dissem, MembershipView(node_id))
        node.apply = self._make_apply(node)
        self.nodes[node_id] = node
        return node

    def _make_apply(self, node: SimNode):
        def apply(var_id, mutator):
            var = node.store.variables[var_id]
            before = var.version
            delta = node.store.update(var_id, mutator)
            if var.version != before:
                node.dissem.local_delta(var_id, delta)
                if var_id != WORKFLOW_VAR:
                    self.last_event_tick = self.tick
            return delta

        return apply

    def _register_triggers(self, node: SimNode) -> None:
        def on_retire(ad_id, local_value, node=node):
            self.retirements.append((self.tick, node.id, ad_id, local_value))

        scenario.register_retirement_triggers(node.store, node.apply, self.ads, on_retire)

    # ------------------------------------------------------------ transport

    def _latency(self, sender: str, receiver: str) -> int:
        cfg = self.config
        if cfg.latency_min == cfg.latency_max:
            return cfg.latency_min
        key = (sender, receiver)
        rng = self.pair_rngs.get(key)
        if rng is None:
            rng = random.Random(_stable_seed(cfg.seed, "latency", sender, receiver))
            self.pair_rngs[key] = rng
        return rng.randint(cfg.latency_min, cfg.latency_max)

    def send(self, payload: Payload) -> None:
        self.msg_seq += 1
        receiver = self.nodes[payload.receiver]
        when = self.tick + self._latency(payload.sender, payload.receiver)
        self.queue.setdefault(when, []).append((self.msg_seq, receiver.generation, payload))
        nbytes = payload.wire_size()
        self.payloads_sent += 1
        if payload.instrumented:
            self.total_instrumented += nbytes
        else:
            self.total_control += nbytes
        phase = self._phase_tag(self.nodes[payload.sender])
        if phase not in self.phase_first_row_tick:
            self.phase_first_row_tick[phase] = self.tick
        if self.sink is not None:
            self.sink.write_row(
                self.tick, payload.sender, payload.receiver, payload.kind,
                payload.var_id, nbytes, payload.instrumented, phase,
            )

    def send_membership(self, sender: SimNode, dest: str, msg: MembershipMsg) -> None:
        self.send(Payload(MEMBERSHIP, sender.id, dest, body=msg, instrumented=False))

    # ------------------------------------------------------------ node state

    def _local_task(self, node: SimNode) -> int | None:
        var = node.store.variables[WORKFLOW_VAR]
        ver, idx = node.task_cache
        if ver == var.version:
            return None if idx >= TASK_COUNT else idx
        w = var.state
        while idx < TASK_COUNT and is_task_complete(w, idx, self.expected):
            idx += 1
        node.task_cache = (var.version, idx)
        return None if idx >= TASK_COUNT else idx

    def _phase_tag(self, node: SimNode) -> int:
        if not self.started:
            return 0
        task = self._local_task(node)
        return 5 if task is None else task + 1

    def _local_total(self, node: SimNode) -> int:
        total = 0
        cache = node.value_cache
        for var_id in self.counter_vars:
            var = node.store.variables[var_id]
            cached = cache.get(var_id)
            if cached is None or cached[0] != var.version:
                cached = (var.version, gcounter_value(var.state))
                cache[var_id] = cached
            total += cached[1]
        return total

    def _mark(self, node: SimNode, task: int) -> None:
        node.mark_ticks[task] = self.tick
        self.mark_ticks[task][node.id] = self.tick
        node.apply(WORKFLOW_VAR, lambda w: mark_complete(w, task, node.id))

    # ------------------------------------------------------------- tick loop

    def step_tick(self) -> None:
        t = self.tick
        cfg = self.config

        for seq, gen, payload in sorted(
            self.queue.pop(t, ()), key=lambda e: (e[2].receiver, e[0])
        ):
            node = self.nodes[payload.receiver]
            if node.generation != gen:
                self.dropped += 1
                continue
            self._dispatch(node, payload)

        if not self.started and self._single_component():
            self.started = True
            self.start_tick = t
            self._sample_diameter()

        if cfg.topology == "hyparview":
            for node in self.order:
                if node.join_tick == t:
                    node.joined = True
                    self.send_membership(node, SERVER_ID, MembershipMsg("join", node.id))

        for node in self.order:
            self._workload(node)
            node.store.fire_ready()

        if t % cfg.propagation_interval == 0:
            for node in self.order:
                # Isolation repair: clients re-join once their scheduled
                # join is out; the contact node only re-joins after the
                # bootstrap gate (its view is legitimately empty before).
                if (
                    cfg.topology == "hyparview"
                    and node.joined
                    and not node.view.active
                    and (self.started or node.join_tick is not None)
                ):
                    for dest, msg in rejoin_if_isolated(node.view, self.directory, node.rng):
                        self.send_membership(node, dest, msg)
                peers = sorted(node.view.active)
                if peers:
                    for payload in node.dissem.propagation_tick(peers):
                        self.send(payload)
                self.max_buffer_len = max(self.max_buffer_len, node.dissem.max_buffer_len())
            if self.overlay_sink is not None:
                for node in self.order:
                    self.overlay_sink.write_row(t, node.id, sorted(node.view.active))

        if cfg.topology == "hyparview" and t > 0 and t % cfg.hpv.shuffle_interval == 0:
            for node in self.order:
                if node.joined:
                    for dest, msg in make_shuffle(node.view, cfg.hpv, node.rng):
                        self.send_membership(node, dest, msg)
                    for dest, msg in maintain_active(node.view, cfg.hpv, node.rng):
                        self.send_membership(node, dest, msg)

        if (
            cfg.churn_per_minute > 0
            and self.started
            and t % cfg.propagation_interval == 0
        ):
            p_interval = cfg.churn_per_minute * cfg.propagation_interval / 60.0
            for node in self.clients:
                if self.churn_rng.random() < p_interval:
                    self._kill_replace(node)

        if (
            self.convergence_tick is None
            and len(self.mark_ticks[TASK_EVENTS]) == len(self.nodes)
            and self._oracle_converged()
        ):
            self.convergence_tick = t
            self._sample_diameter()

        self.tick += 1

    def _dispatch(self, node: SimNode, payload: Payload) -> None:
        if payload.kind == MEMBERSHIP:
            node.view, out = hpv_handle(node.view, payload.body, self.config.hpv, node.rng)
            for dest, msg in out:
                self.send_membership(node, dest, msg)
        elif payload.kind == ACK:
            if not node.dissem.handle_ack(payload, node.view.active):
                self.unknown_acks += 1
        else:
            ack = node.dissem.handle_payload(payload)
            if ack is not None:
                self.send(ack)

    def _workload(self, node: SimNode) -> None:
        if not self.started or node.done_tick is not None:
            return
        task = self._local_task(node)
        if task is None:
            node.done_tick = self.tick
            return
        if task == TASK_EVENTS:
            if node.role == "server":
                if TASK_EVENTS not in node.mark_ticks:
                    self._mark(node, TASK_EVENTS)
                return
            cfg = self.config
            since = self.tick - self.start_tick
            if (
                node.impressions_done < cfg.ipc
                and since > 0
                and since % cfg.impression_interval == 0
            ):
                scenario.client_impression(node.store, node.apply, node.id, node.rng)
                node.impressions_done += 1
                self.impression_count += 1
                if self.first_impression_tick is None:
                    self.first_impression_tick = self.tick
                if node.impressions_done == cfg.ipc:
                    self._mark(node, TASK_EVENTS)
        elif task == TASK_CONVERGE:
            if (
                TASK_CONVERGE not in node.mark_ticks
                and self._local_total(node) == self.expected_total
            ):
                self._mark(node, TASK_CONVERGE)
        elif task == TASK_AGGREGATE:
            if TASK_AGGREGATE not in node.mark_ticks:
                self._mark(node, TASK_AGGREGATE)
        elif TASK_SHUTDOWN not in node.mark_ticks:
            self._mark(node, TASK_SHUTDOWN)

    # ------------------------------------------------------------ churn

    def _kill_replace(self, node: SimNode) -> None:
        # The process dies and is replaced in place: connections, delta
        # logs and ack bookkeeping are lost, the durable variable store
        # survives. Peers holding the dead process in their active view
        # observe the connection reset immediately.
        node.generation += 1
        node.view = MembershipView(node.id)
        node.dissem.reset_protocol_state()
        self.churn_kills.append((self.tick, node.id))
        for peer in self.order:
            if peer is node or node.id not in peer.view.active:
                continue
            peer.view, out = hpv_on_failure(peer.view, node.id, self.config.hpv, peer.rng)
            for dest, msg in out:
                self.send_membership(peer, dest, msg)

    # ------------------------------------------------------------ analysis

    def _views(self) -> dict[str, MembershipView]:
        return {node.id: node.view for node in self.order}

    def _single_component(self) -> bool:
        return is_single_component(self._views(), self.expected)

    def _sample_diameter(self) -> None:
        try:
            self.diameter_samples.append((self.tick, diameter(self._views())))
        except OverlayError:
            pass

    def _oracle_converged(self) -> bool:
        ref = self.order[0]
        for var_id, var in ref.store.variables.items():
            if var_id == WORKFLOW_VAR:
                continue
            state = var.state
            for other in self.order[1:]:
                if other.store.variables[var_id].state != state:
                    return False
        return True

    def oracle_converged(self) -> bool:
        """Omniscient check: every non-barrier variable equal everywhere."""
        return self._oracle_converged()

    # ------------------------------------------------------------- lifecycle

    def all_done(self) -> bool:
        return all(node.done_tick is not None for node in self.order)

    def diagnose(self) -> str:
        lines = [f"phase timeout at tick {self.tick}"]
        if not self.started:
            lines.append("bootstrap never reached a single connected component")
        for task in range(TASK_COUNT):
            missing = sorted(self.expected - set(self.mark_ticks[task]))
            if missing:
                lines.append(f"task {task} unmarked by: {', '.join(missing)}")
                break
        return "; ".join(lines)

    def finalize(self) -> RunReport:
        self._sample_diameter()
        joined_counters = {}
        for var_id in self.counter_vars:
            state = self.order[0].store.state(var_id)
            for node in self.order[1:]:
                state = join(state, node.store.state(var_id))
            joined_counters[var_id] = gcounter_value(state)
        ad_counts = {
            ad.ad_id: joined_counters[ad.counter_variable] for ad in self.ads
        }
        inband = None
        if len(self.mark_ticks[TASK_CONVERGE]) == len(self.nodes):
            inband = max(self.mark_ticks[TASK_CONVERGE].values())
        return RunReport(
            config=self.config,
            ticks_run=self.tick,
            start_tick=self.start_tick if self.start_tick is not None else -1,
            last_event_tick=self.last_event_tick,
            convergence_tick=self.convergence_tick,
            inband_convergence_tick=inband,
            done_tick=max(n.done_tick for n in self.order),
            total_instrumented_bytes=self.total_instrumented,
            total_control_bytes=self.total_control,
            payloads_sent=self.payloads_sent,
            diameter_samples=self.diameter_samples,
            ad_counts=ad_counts,
            spillover_count=joined_counters[scenario.SPILLOVER_VAR],
            impressions_total=self.impression_count,
            retirements=self.retirements,
            mark_ticks=self.mark_ticks,
            first_impression_tick=self.first_impression_tick,
            phase_first_row_tick=self.phase_first_row_tick,
            max_buffer_len=self.max_buffer_len,
            churn_kills=self.churn_kills,
            dropped_messages=self.dropped,
            unknown_acks=self.unknown_acks,
        )


def run_experiment(config: ExperimentConfig, metrics_sink=None, overlay_sink=None) -> RunReport:
    """Execute one experiment to completion and return its report."""
    world = World(config, metrics_sink, overlay_sink)
    while not world.all_done():
        if world.tick > world.timeout_ticks:
            raise PhaseTimeout(world.diagnose())
        world.step_tick()
    return world.finalize()


def step_tick(world: World) -> World:
    """Advance the world by one tick (driver for tests and tooling)."""
    world.step_tick()
    return world


def oracle_converged(world: World) -> bool:
    """Omniscient convergence check over a world snapshot."""
    return world.oracle_converged()
