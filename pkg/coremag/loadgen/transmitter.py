#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Émetteur réel : exécute un ordonnancement en chargeant les cœurs du CPU.

Un processus par cœur logique (le GIL empêche plusieurs threads Python de
charger plusieurs cœurs), fixé sur son cœur, alterne boucle active et sommeil
selon des échéances absolues de l'horloge monotone.
"""

import logging
import multiprocessing
import queue as queue_module
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import psutil

from coremag.config import Config
from coremag.errors import (AffinityUnsupported, ClockResolutionTooCoarse, CoreUnavailable,
                            TransmitError, UnachievableTiming)
from coremag.modem.schemes import CoreSchedule, toggle_pattern

logger = logging.getLogger(__name__)

START_DELAY_S = 0.2
SLEEP_CHUNK_S = 0.1


@dataclass(frozen=True)
class TransmitPlan:
    """
    Plan d'émission.

    Args:
        schedule (CoreSchedule): ordonnancement à exécuter
        core_map (tuple, optional): cœur logique du système pour chaque ligne
            de l'ordonnancement (par défaut les premiers cœurs disponibles)
        priority_hint (int, optional): valeur `nice` appliquée aux workers
    """
    schedule: CoreSchedule
    core_map: Optional[Tuple[int, ...]] = None
    priority_hint: Optional[int] = None


@dataclass
class TransmitReport:
    busy_ms: List[float]
    wall_ms: float
    slot_duty: List[List[float]]
    max_lateness_ms: float
    cycles: List[int] = field(default_factory=list)
    core_map: Tuple[int, ...] = ()
    affinity: List[Tuple[int, ...]] = field(default_factory=list)


def _clock_resolution_s() -> float:
    return time.get_clock_info('monotonic').resolution


def check_clock():
    resolution = _clock_resolution_s()
    if resolution > Config.SCHEDULE_GRANULARITY_MS / 1000.0:
        raise ClockResolutionTooCoarse(f"résolution de l'horloge monotone : {resolution * 1000:.3f} ms")


def available_cores() -> List[int]:
    if not hasattr(psutil.Process, 'cpu_affinity'):
        raise AffinityUnsupported("affinité des processus non disponible sur ce système")
    try:
        return sorted(psutil.Process().cpu_affinity())
    except (psutil.Error, OSError) as e:
        raise AffinityUnsupported(f"lecture de l'affinité impossible : {str(e)}")


def cpu_budget() -> int:
    """Nombre de cœurs utilisables, plafonné par COREMAG_MAX_CORES."""
    count = len(available_cores())
    if Config.MAX_CORES is not None:
        count = min(count, max(0, Config.MAX_CORES))
    return count


def _cpu_seconds(proc: psutil.Process) -> float:
    times = proc.cpu_times()
    return times.user + times.system


def _busy_wait(deadline: float):
    while time.monotonic() < deadline:
        pass


def _sleep_until(deadline: float, stop):
    while not stop.is_set():
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return
        time.sleep(min(remaining, SLEEP_CHUNK_S))


def _worker(index: int, os_core: int, segments, barrier, stop, start_at, results, priority):
    proc = psutil.Process()
    try:
        proc.cpu_affinity([os_core])
        bound = tuple(proc.cpu_affinity())
        if bound != (os_core,):
            raise OSError(f"affinité non appliquée pour le cœur {os_core}")
        if priority is not None:
            proc.nice(priority)
    except (psutil.Error, OSError, AttributeError) as e:
        results.put((index, 'error', str(e)))
        barrier.abort()
        return

    try:
        barrier.wait()
    except threading.BrokenBarrierError:
        return

    deadline = start_at.value
    _sleep_until(deadline, stop)
    records = []
    for busy, duration in segments:
        if stop.is_set():
            break
        lateness = max(0.0, time.monotonic() - deadline)
        cpu_before = _cpu_seconds(proc)
        deadline += duration / 1000.0
        if busy:
            _busy_wait(deadline)
        else:
            _sleep_until(deadline, stop)
        records.append(((_cpu_seconds(proc) - cpu_before) * 1000.0, lateness * 1000.0))
    results.put((index, 'ok', (records, time.monotonic(), bound)))


def _slot_duty(segments, records, edges: Sequence[int]) -> List[float]:
    starts = np.concatenate([[0], np.cumsum([d for _, d in segments])[:-1]])
    duty = []
    for s, e in zip(edges[:-1], edges[1:]):
        cpu = 0.0
        for start, (_, duration), (cpu_ms, _) in zip(starts, segments, records):
            overlap = min(start + duration, e) - max(start, s)
            if overlap > 0:
                cpu += cpu_ms * overlap / duration
        duty.append(float(np.clip(cpu / (e - s), 0.0, 1.0)))
    return duty


def _resolve_core_map(plan: TransmitPlan) -> Tuple[int, ...]:
    n = plan.schedule.n_cores
    if n == 0:
        raise CoreUnavailable("aucun cœur dans le plan d'émission")
    available = available_cores()
    budget = cpu_budget()
    if n > budget:
        raise CoreUnavailable(f"{n} cœurs demandés, {budget} utilisables")
    core_map = tuple(plan.core_map) if plan.core_map is not None else tuple(available[:n])
    if len(core_map) != n or len(set(core_map)) != n:
        raise CoreUnavailable("la correspondance des cœurs doit être injective et complète")
    missing = [c for c in core_map if c not in available]
    if missing:
        raise CoreUnavailable(f"cœurs absents de l'hôte : {missing}")
    return core_map


def transmit(plan: TransmitPlan) -> TransmitReport:
    """
    Exécute l'ordonnancement sur les cœurs réels.

    Tous les workers démarrent ensemble (barrière) ; un drapeau d'arrêt
    partagé est consulté à chaque frontière de segment.

    Returns:
        TransmitReport: mesures issues de la comptabilité CPU du système
    """
    check_clock()
    core_map = _resolve_core_map(plan)
    schedule = plan.schedule
    n = schedule.n_cores

    ctx = multiprocessing.get_context()
    barrier = ctx.Barrier(n + 1)
    stop = ctx.Event()
    results = ctx.Queue()
    start_at = ctx.Value('d', 0.0)
    workers = [ctx.Process(target=_worker, daemon=True,
                           args=(i, core_map[i], schedule.cores[i], barrier, stop, start_at,
                                 results, plan.priority_hint))
               for i in range(n)]

    logger.info(f"Émission sur les cœurs {list(core_map)} pendant {schedule.total_duration_ms} ms")
    collected = {}
    try:
        for w in workers:
            w.start()
        start_at.value = time.monotonic() + START_DELAY_S
        try:
            barrier.wait(timeout=30)
        except threading.BrokenBarrierError:
            errors = []
            while True:
                try:
                    index, status, payload = results.get(timeout=1)
                except queue_module.Empty:
                    break
                if status == 'error':
                    errors.append(f"cœur {core_map[index]} : {payload}")
            raise AffinityUnsupported('; '.join(errors) or "démarrage synchronisé des workers impossible")

        timeout = schedule.total_duration_ms / 1000.0 + START_DELAY_S + 30
        while len(collected) < n:
            try:
                index, status, payload = results.get(timeout=timeout)
            except queue_module.Empty:
                raise TransmitError("les workers n'ont pas rendu compte à temps")
            if status == 'ok':
                collected[index] = payload
    except KeyboardInterrupt:
        logger.warning("Émission interrompue")
        raise
    finally:
        stop.set()
        for w in workers:
            w.join(timeout=2)
            if w.is_alive():
                w.terminate()
                w.join()

    t0 = start_at.value
    edges = list(schedule.slot_edges_ms) or [0, schedule.total_duration_ms]
    busy_ms, duty, cycles, affinity, lateness, ends = [], [], [], [], [0.0], [t0]
    for i in range(n):
        records, end, bound = collected[i]
        affinity.append(bound)
        segments = schedule.cores[i][:len(records)]
        busy_ms.append(float(sum(cpu for cpu, _ in records)))
        duty.append(_slot_duty(segments, records, edges))
        cycles.append(sum(1 for (busy, d), (cpu, _) in zip(segments, records) if busy and cpu >= 0.5 * d))
        lateness += [late for _, late in records]
        ends.append(end)

    report = TransmitReport(busy_ms=busy_ms, wall_ms=(max(ends) - t0) * 1000.0, slot_duty=duty,
                            max_lateness_ms=max(lateness), cycles=cycles, core_map=core_map,
                            affinity=affinity)
    logger.info(f"Émission terminée en {report.wall_ms:.1f} ms, retard maximal {report.max_lateness_ms:.2f} ms")
    return report


def carrier_schedule(duration_ms: int, freq_hz: float, cores: int) -> CoreSchedule:
    """Porteuse de calibration : tous les cœurs basculent en phase à `freq_hz`."""
    if cores < 1:
        raise CoreUnavailable("au moins un cœur est nécessaire")
    if freq_hz <= 0 or duration_ms <= 0:
        raise UnachievableTiming("fréquence et durée doivent être positives")
    half_cycle = 1000.0 / (2.0 * freq_hz)
    if half_cycle < Config.SCHEDULE_GRANULARITY_MS:
        raise UnachievableTiming(f"demi-cycle de {half_cycle:.3f} ms sous la granularité de 1 ms")
    if half_cycle < 2 * Config.SCHEDULE_GRANULARITY_MS:
        logger.warning(f"Demi-cycle de {half_cycle:.1f} ms à la limite de granularité, fidélité dégradée")
    row = toggle_pattern(int(duration_ms), freq_hz)
    matrix = np.tile(row, (cores, 1))
    return CoreSchedule.from_matrix(matrix, max_toggle_hz=freq_hz, slot_edges_ms=[0, int(duration_ms)])


def self_test(duration_ms: int, freq_hz: float, cores: int) -> TransmitReport:
    """Émet une porteuse de calibration et mesure la fidélité temporelle."""
    if cores < 1:
        raise CoreUnavailable("au moins un cœur est nécessaire")
    check_clock()
    report = transmit(TransmitPlan(carrier_schedule(duration_ms, freq_hz, cores)))
    expected = int(duration_ms * freq_hz / 1000.0)
    if min(report.cycles) < expected - 1:
        logger.warning(f"Cycles observés {report.cycles}, {expected} attendus")
    return report


def format_report(report: TransmitReport) -> str:
    """Rapport au format `clé valeur`, une ligne par mesure."""
    lines = [f"wall_ms {report.wall_ms:.3f}",
             f"max_lateness_ms {report.max_lateness_ms:.3f}"]
    for i, core in enumerate(report.core_map or range(len(report.busy_ms))):
        lines.append(f"core.{core}.busy_ms {report.busy_ms[i]:.3f}")
        if report.cycles:
            lines.append(f"core.{core}.cycles {report.cycles[i]}")
        lines.append(f"core.{core}.duty {','.join(f'{d:.3f}' for d in report.slot_duty[i])}")
        if report.affinity:
            lines.append(f"core.{core}.affinity {','.join(str(c) for c in report.affinity[i])}")
    return '\n'.join(lines)
