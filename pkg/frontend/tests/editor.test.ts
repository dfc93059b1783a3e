// DAG editor: activation markers, selection, inline cycle rejection, and the
// deterministic layout manual positions override.

import { describe, expect, it } from "vitest";
import model from "../fixtures/model.json";
import cycleError from "../fixtures/cycle_error.json";
import type { ModelPayload } from "../src/api";
import { effectivePositions, forceLayout } from "../src/layout";
import { cycleErrorFrom, renderDagEditor } from "../src/panels/editor";
import { initialView } from "../src/state";
import { findAll, findByClass, renderToString, textOf } from "../src/vdom";

const modelPayload = model as unknown as ModelPayload;

describe("dag editor", () => {
  const tree = renderDagEditor(modelPayload, initialView);

  it("renders every node and edge", () => {
    const nodes = findAll(tree, (n) => n.tag === "g" && "data-node" in n.attrs);
    expect(nodes.length).toBe(modelPayload.nodes.length);
    const edges = findAll(tree, (n) => n.tag === "line");
    expect(edges.length).toBe(modelPayload.edges.length);
  });

  it("marks activation nodes distinctly", () => {
    const marked = findByClass(tree, "activation").map((n) => n.attrs["data-node"]);
    const expected = modelPayload.nodes.filter((n) => n.activation).map((n) => n.id);
    expect(marked.sort()).toEqual(expected.sort());
    const rollback = findAll(tree, (n) => n.attrs["data-node"] === "automatic-rollback")[0]!;
    expect(textOf(rollback)).toContain("activation");
  });

  it("highlights the selected node", () => {
    const selectedTree = renderDagEditor(modelPayload, {
      ...initialView,
      selectedNode: "consequences",
    });
    const selected = findByClass(selectedTree, "selected");
    expect(selected.length).toBe(1);
    expect(selected[0]!.attrs["data-node"]).toBe("consequences");
  });

  it("shows the cycle rejection inline with the path", () => {
    const error = cycleErrorFrom((cycleError as { detail: unknown }).detail);
    expect(error.cycle).toEqual(["t1", "g", "t1"]);
    const withError = renderDagEditor(modelPayload, initialView, error);
    const alert = findByClass(withError, "inline-error")[0]!;
    expect(textOf(alert)).toBe("edge rejected: would close the cycle t1 → g → t1");
  });

  it("opens the inspector for the selected node", () => {
    const selectedTree = renderDagEditor(modelPayload, {
      ...initialView,
      selectedNode: "automatic-rollback",
    });
    const inspector = findByClass(selectedTree, "node-inspector")[0]!;
    expect(textOf(inspector)).toContain("Automatic Rollback");
    const checkbox = findAll(inspector, (n) => n.attrs["type"] === "checkbox")[0]!;
    expect(checkbox.attrs["checked"]).toBe("checked");
  });
});

describe("layout", () => {
  it("is deterministic", () => {
    const a = forceLayout(modelPayload);
    const b = forceLayout(modelPayload);
    for (const [id, p] of a) {
      expect(b.get(id)).toEqual(p);
    }
  });

  it("keeps nodes inside the canvas", () => {
    for (const p of forceLayout(modelPayload).values()) {
      expect(p.x).toBeGreaterThanOrEqual(60);
      expect(p.x).toBeLessThanOrEqual(900);
      expect(p.y).toBeGreaterThanOrEqual(40);
      expect(p.y).toBeLessThanOrEqual(520);
    }
  });

  it("persisted manual positions win over the computed layout", () => {
    const pinned: ModelPayload = {
      ...modelPayload,
      ui_positions: { "faulty-change": [111, 222] },
    };
    const positions = effectivePositions(pinned);
    expect(positions.get("faulty-change")).toEqual({ x: 111, y: 222 });
  });

  it("rendering uses the effective positions", () => {
    const pinned: ModelPayload = {
      ...modelPayload,
      ui_positions: { "faulty-change": [111, 222] },
    };
    const html = renderToString(renderDagEditor(pinned, initialView));
    expect(html).toContain(`translate(${111 - 66},${222 - 20})`);
  });
});
