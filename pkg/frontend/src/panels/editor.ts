/** DAG editor: SVG graph plus node/edge editing controls. Activation nodes
 * carry a distinct marker class; structural rejections from the API (cycle
 * paths, duplicate edges) render inline next to the controls. */

import type { ModelPayload } from "../api";
import { effectivePositions } from "../layout";
import { h, VNode } from "../vdom";
import type { ViewState } from "../state";

export interface EditorError {
  message: string;
  cycle?: string[];
}

export function cycleErrorFrom(detail: unknown): EditorError {
  if (detail && typeof detail === "object" && "cycle" in detail) {
    const cycle = (detail as { cycle: string[] }).cycle;
    return { message: `edge rejected: would close the cycle ${cycle.join(" → ")}`, cycle };
  }
  return { message: String(detail) };
}

const NODE_W = 132;
const NODE_H = 40;

export function renderDagEditor(model: ModelPayload, view: ViewState, error?: EditorError): VNode {
  const pos = effectivePositions(model);

  const edges = model.edges.map((e) => {
    const a = pos.get(e.parent);
    const b = pos.get(e.child);
    if (!a || !b) return h("g");
    return h("line", {
      class: "edge",
      x1: String(a.x),
      y1: String(a.y),
      x2: String(b.x),
      y2: String(b.y),
      "data-parent": e.parent,
      "data-child": e.child,
    });
  });

  const nodes = model.nodes.map((n) => {
    const p = pos.get(n.id) ?? { x: 0, y: 0 };
    const classes = ["node", `kind-${n.kind}`];
    if (n.activation) classes.push("activation");
    if (view.selectedNode === n.id) classes.push("selected");
    if (n.id in model.evidence) classes.push("observed");
    return h(
      "g",
      {
        class: classes.join(" "),
        "data-node": n.id,
        "data-action": "select-node",
        transform: `translate(${p.x - NODE_W / 2},${p.y - NODE_H / 2})`,
      },
      h("rect", { width: String(NODE_W), height: String(NODE_H), rx: "6" }),
      h("text", { x: String(NODE_W / 2), y: "17", "text-anchor": "middle" }, n.name),
      h(
        "text",
        { class: "kind-label", x: String(NODE_W / 2), y: "32", "text-anchor": "middle" },
        n.kind + (n.activation ? " • activation" : ""),
      ),
    );
  });

  const selected = model.nodes.find((n) => n.id === view.selectedNode) ?? null;

  return h(
    "section",
    { class: "panel editor-panel" },
    error
      ? h("div", { class: "inline-error", role: "alert" }, error.message)
      : null,
    h("svg", { class: "dag", viewBox: "0 0 960 560" }, ...edges, ...nodes),
    h(
      "div",
      { class: "editor-controls" },
      h(
        "form",
        { class: "add-node", "data-action": "add-node" },
        h("input", { name: "name", placeholder: "node name" }),
        h(
          "select",
          { name: "kind" },
          ...["cause", "context", "event", "barrier", "top-event", "consequence", "gate-and", "gate-or"].map(
            (k) => h("option", { value: k }, k),
          ),
        ),
        h("button", { type: "submit" }, "add node"),
      ),
      h(
        "form",
        { class: "add-edge", "data-action": "add-edge" },
        h("input", { name: "parent", placeholder: "parent id" }),
        h("input", { name: "child", placeholder: "child id" }),
        h("button", { type: "submit" }, "add edge"),
      ),
      selected ? renderNodeInspector(selected) : h("p", { class: "hint" }, "select a node to edit it"),
    ),
  );
}

function renderNodeInspector(node: ModelPayload["nodes"][number]): VNode {
  return h(
    "form",
    { class: "node-inspector", "data-action": "edit-node", "data-node": node.id },
    h("h3", {}, `${node.name} (${node.id})`),
    h("label", {}, "name ", h("input", { name: "name", value: node.name })),
    h(
      "label",
      {},
      "states ",
      h("input", { name: "states", value: node.states.join(", ") }),
    ),
    h(
      "label",
      { class: "activation-toggle" },
      h("input", {
        type: "checkbox",
        name: "activation",
        "data-action": "toggle-activation",
        ...(node.activation ? { checked: "checked" } : {}),
      }),
      " intervention-capable (activation)",
    ),
    h("button", { type: "submit" }, "apply"),
    h("button", { type: "button", "data-action": "delete-node", "data-node": node.id }, "delete node"),
  );
}
