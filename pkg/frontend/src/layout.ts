/** Deterministic force-directed placement for the initial DAG layout.
 * Fixed seed positions (a circle in node order), fixed iteration count, no
 * randomness: the same model always lands in the same spots. Manual drags
 * are persisted server-side and win over this. */

import type { ModelPayload } from "./api";

export interface Point {
  x: number;
  y: number;
}

const WIDTH = 960;
const HEIGHT = 560;
const ITERATIONS = 150;
const SPRING_LENGTH = 140;
const SPRING_K = 0.02;
const REPULSION = 22000;
const STEP = 0.85;

export function forceLayout(model: ModelPayload): Map<string, Point> {
  const ids = model.nodes.map((n) => n.id);
  const pos = new Map<string, Point>();
  ids.forEach((id, i) => {
    const angle = (2 * Math.PI * i) / Math.max(ids.length, 1);
    pos.set(id, {
      x: WIDTH / 2 + (WIDTH / 3) * Math.cos(angle),
      y: HEIGHT / 2 + (HEIGHT / 3) * Math.sin(angle),
    });
  });

  const edges = model.edges.map((e) => [e.parent, e.child] as const);
  for (let iter = 0; iter < ITERATIONS; iter++) {
    const force = new Map<string, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));
    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        const a = pos.get(ids[i]!)!;
        const b = pos.get(ids[j]!)!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = REPULSION / d2;
        const d = Math.sqrt(d2);
        const fx = (push * dx) / d;
        const fy = (push * dy) / d;
        const fa = force.get(ids[i]!)!;
        const fb = force.get(ids[j]!)!;
        fa.x += fx;
        fa.y += fy;
        fb.x -= fx;
        fb.y -= fy;
      }
    }
    for (const [p, c] of edges) {
      const a = pos.get(p);
      const b = pos.get(c);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = SPRING_K * (d - SPRING_LENGTH);
      const fa = force.get(p)!;
      const fb = force.get(c)!;
      fa.x += (pull * dx) / d;
      fa.y += (pull * dy) / d;
      fb.x -= (pull * dx) / d;
      fb.y -= (pull * dy) / d;
    }
    for (const id of ids) {
      const f = force.get(id)!;
      const p = pos.get(id)!;
      p.x = Math.min(WIDTH - 60, Math.max(60, p.x + STEP * f.x));
      p.y = Math.min(HEIGHT - 40, Math.max(40, p.y + STEP * f.y));
    }
  }
  return pos;
}

/** Persisted manual positions override the computed ones. */
export function effectivePositions(model: ModelPayload): Map<string, Point> {
  const computed = forceLayout(model);
  for (const [id, [x, y]] of Object.entries(model.ui_positions)) {
    computed.set(id, { x, y });
  }
  return computed;
}
