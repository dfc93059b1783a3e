/** Browser bootstrap: route between panels, fetch through the API client,
 * re-render on every state or data change. Capture links open with
 * `#capture=<token>`; everything else needs a model id (`#model=<id>`). */

import { ApiClient, ApiError, CapturePage, ModelPayload } from "./api";
import { Action, ViewState, initialView, reduce } from "./state";
import { Child, findAll, toDom, VNode, h } from "./vdom";
import { renderDagEditor, cycleErrorFrom, EditorError } from "./panels/editor";
import { RowDraft, renderCptPanel, validateRowDraft } from "./panels/cpt";
import { renderCaptureForm, renderExpiredToken, SubmissionStatus, validateManualAnswer } from "./panels/capture";
import { renderNoiseView } from "./panels/noise";
import { CausalData, renderCausalPanel } from "./panels/causal";
import { forceLayout } from "./layout";

const PANELS = ["editor", "cpt", "capture", "noise", "causal"] as const;

class App {
  private api = new ApiClient("");
  private view: ViewState = initialView;
  private model: ModelPayload | null = null;
  private editorError: EditorError | undefined;
  private rowDraft: RowDraft | undefined;
  private capture: { token: string; page: CapturePage | null; status?: SubmissionStatus } | null = null;
  private causal: CausalData = {
    posterior: null, rank: null, dsep: null, trails: null, backdoor: null, contradiction: null,
  };

  constructor(private root: HTMLElement) {}

  async start() {
    const hash = new URLSearchParams(location.hash.slice(1));
    const token = hash.get("capture");
    if (token) {
      this.view = { ...this.view, panel: "capture" };
      await this.openCapture(token);
      return;
    }
    const modelId = hash.get("model") ?? (await this.firstModel());
    if (modelId) await this.openModel(modelId);
    this.render();
  }

  private async firstModel(): Promise<string | null> {
    const models = await this.api.listModels();
    return models.length ? models[0]!.id : null;
  }

  private async openModel(modelId: string) {
    this.view = reduce(this.view, { kind: "open-model", modelId });
    this.model = await this.api.getModel(modelId);
    if (Object.keys(this.model.ui_positions).length === 0 && this.model.nodes.length) {
      const computed = forceLayout(this.model);
      const positions: Record<string, [number, number]> = {};
      for (const [nid, p] of computed) positions[nid] = [Math.round(p.x), Math.round(p.y)];
      await this.api.saveUiPositions(modelId, positions).catch(() => undefined);
      this.model = await this.api.getModel(modelId);
    }
    await this.refreshCausal();
  }

  private async openCapture(token: string) {
    try {
      const page = await this.api.capturePage(token);
      this.capture = { token, page };
    } catch (err) {
      this.capture = { token, page: null };
    }
    this.render();
  }

  private async refreshModel() {
    if (this.view.modelId) this.model = await this.api.getModel(this.view.modelId);
  }

  private async refreshCausal() {
    const modelId = this.view.modelId;
    if (!modelId || !this.model) return;
    this.causal = { ...this.causal, posterior: null, rank: null, contradiction: null };
    try {
      this.causal.posterior = await this.api.posterior(modelId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.causal.contradiction = String(err.detail);
      }
    }
    const target = this.view.causalTarget;
    if (target) {
      try {
        this.causal.rank = await this.api.rank(modelId, target.node, target.state);
      } catch {
        this.causal.rank = null;
      }
    }
  }

  private dispatch(action: Action) {
    this.view = reduce(this.view, action);
    this.render();
  }

  // -- rendering ------------------------------------------------------------

  private render() {
    const tree = this.renderTree();
    this.root.replaceChildren(toDom(tree, document));
    this.wire();
  }

  private renderTree(): VNode {
    if (this.capture) {
      return this.capture.page
        ? renderCaptureForm(this.capture.page, this.capture.status)
        : renderExpiredToken();
    }
    if (!this.model) {
      return h("main", {}, h("p", { class: "hint" }, "no models yet; create one through the API or CLI"));
    }
    const nav = h(
      "nav",
      { class: "panel-nav" },
      ...PANELS.map((p) =>
        h(
          "button",
          {
            class: this.view.panel === p ? "active" : "",
            "data-action": "switch-panel",
            "data-panel": p,
          },
          p,
        ),
      ),
    );
    return h("main", {}, nav, this.renderActivePanel());
  }

  private renderActivePanel(): VNode {
    const model = this.model!;
    switch (this.view.panel) {
      case "editor":
        return renderDagEditor(model, this.view, this.editorError);
      case "cpt":
        return this.cptTree ?? h("section", { class: "panel" }, h("p", { class: "hint" }, "select a node first"));
      case "capture":
        return h("section", { class: "panel" },
          h("p", { class: "hint" }, "open a tokenized capture link (#capture=<token>) to answer questions"));
      case "noise":
        return this.noiseTree ?? h("section", { class: "panel" }, h("p", { class: "hint" }, "loading estimates…"));
      case "causal":
        return renderCausalPanel(model, this.view, this.causal);
    }
  }

  private cptTree: VNode | null = null;
  private noiseTree: VNode | null = null;

  private async loadPanelData() {
    const modelId = this.view.modelId;
    if (!modelId) return;
    if (this.view.panel === "cpt" && this.view.selectedNode) {
      const cpt = await this.api.getCpt(modelId, this.view.selectedNode);
      this.cptTree = renderCptPanel(cpt, this.rowDraft);
    }
    if (this.view.panel === "noise") {
      const rows = await this.api.estimates(modelId);
      this.noiseTree = renderNoiseView(rows);
    }
    this.render();
  }

  // -- event wiring ------------------------------------------------------------

  private wire() {
    this.root.querySelectorAll<HTMLElement>("[data-action]").forEach((el) => {
      const action = el.dataset["action"]!;
      if (el instanceof HTMLFormElement) {
        el.addEventListener("submit", (ev) => {
          ev.preventDefault();
          void this.onForm(action, el);
        });
      } else if (el instanceof HTMLSelectElement || (el instanceof HTMLInputElement && el.type === "checkbox")) {
        el.addEventListener("change", () => void this.onControl(action, el));
      } else if (el instanceof HTMLInputElement) {
        el.addEventListener("input", () => void this.onControl(action, el));
      } else {
        el.addEventListener("click", () => void this.onClick(action, el));
      }
    });
  }

  private async onClick(action: string, el: HTMLElement) {
    const modelId = this.view.modelId;
    try {
      switch (action) {
        case "switch-panel":
          this.dispatch({ kind: "switch-panel", panel: el.dataset["panel"] as ViewState["panel"] });
          await this.loadPanelData();
          break;
        case "select-node":
          this.dispatch({ kind: "select-node", node: el.dataset["node"] ?? null });
          break;
        case "delete-node":
          if (modelId && el.dataset["node"]) {
            await this.api.deleteNode(modelId, el.dataset["node"]);
            await this.refreshModel();
            this.dispatch({ kind: "select-node", node: null });
          }
          break;
        case "save-row":
          await this.saveRow(el.dataset["config"] ?? "");
          break;
        case "quick-set":
          await this.submitQuickSet(el.dataset["question"] ?? "", el.dataset["label"] ?? "");
          break;
        case "apply-evidence":
          await this.applyEvidence();
          break;
        case "clear-evidence":
          if (modelId) {
            await this.api.clearEvidence(modelId);
            this.dispatch({ kind: "clear-evidence" });
            await this.refreshModel();
            await this.refreshCausal();
            this.render();
          }
          break;
      }
    } catch (err) {
      this.surfaceError(err);
    }
  }

  private async onControl(action: string, el: HTMLSelectElement | HTMLInputElement) {
    if (action === "stage-evidence" && el instanceof HTMLSelectElement) {
      const node = el.dataset["node"]!;
      if (el.value === "") this.dispatch({ kind: "unstage-evidence", node });
      else this.dispatch({ kind: "stage-evidence", node, state: el.value });
    }
    if (action === "edit-cell" && el instanceof HTMLInputElement) {
      this.updateDraft(el.dataset["config"] ?? "", Number(el.dataset["state"]), el.value);
      await this.loadPanelData();
    }
    if (action === "toggle-activation" && el instanceof HTMLInputElement) {
      const modelId = this.view.modelId;
      const form = el.closest("form");
      const node = form?.dataset["node"];
      if (modelId && node) {
        await this.api.editNode(modelId, node, { activation: el.checked });
        await this.refreshModel();
        this.render();
      }
    }
  }

  private async onForm(action: string, form: HTMLFormElement) {
    const modelId = this.view.modelId;
    const data = new FormData(form);
    try {
      switch (action) {
        case "add-node":
          if (modelId) {
            await this.api.addNode(modelId, {
              name: String(data.get("name") ?? ""),
              kind: String(data.get("kind") ?? "event"),
            });
            this.editorError = undefined;
            await this.refreshModel();
            this.render();
          }
          break;
        case "add-edge":
          if (modelId) {
            await this.api.addEdge(modelId, String(data.get("parent") ?? ""), String(data.get("child") ?? ""));
            this.editorError = undefined;
            await this.refreshModel();
            this.render();
          }
          break;
        case "edit-node":
          if (modelId && form.dataset["node"]) {
            await this.api.editNode(modelId, form.dataset["node"], {
              name: String(data.get("name") ?? ""),
              states: String(data.get("states") ?? "")
                .split(",")
                .map((s) => s.trim())
                .filter(Boolean),
            });
            await this.refreshModel();
            this.render();
          }
          break;
        case "submit-answer":
          await this.submitManual(form.dataset["question"] ?? "", String(data.get("value") ?? ""));
          break;
        case "set-target":
          this.dispatch({
            kind: "set-causal-target",
            node: String(data.get("node") ?? ""),
            state: String(data.get("state") ?? ""),
          });
          await this.refreshCausal();
          this.render();
          break;
        case "run-dsep":
          if (modelId) {
            const x = String(data.get("x") ?? "");
            const y = String(data.get("y") ?? "");
            const z = String(data.get("z") ?? "").split(",").map((s) => s.trim()).filter(Boolean);
            const [dsep, trails, backdoor] = await Promise.all([
              this.api.dsep(modelId, x, y, z),
              this.api.trails(modelId, x, y, z),
              this.api.backdoor(modelId, x, y, "minimal").catch(() => null),
            ]);
            this.causal.dsep = { x, y, z, separated: dsep.separated };
            this.causal.trails = trails.trails;
            this.causal.backdoor = backdoor ? { x, y, sets: backdoor.sets } : null;
            this.render();
          }
          break;
      }
    } catch (err) {
      this.surfaceError(err);
    }
  }

  private updateDraft(configKey: string, stateIndex: number, raw: string) {
    if (!this.rowDraft || this.rowDraft.configKey !== configKey) {
      const k = this.cptK ?? stateIndex + 2;
      this.rowDraft = { configKey, cells: new Array(k - 1).fill(null) };
    }
    this.rowDraft.cells[stateIndex] = raw.trim() === "" ? null : Number(raw);
  }

  private cptK: number | null = null;

  private async saveRow(configKey: string) {
    const modelId = this.view.modelId;
    const node = this.view.selectedNode;
    if (!modelId || !node || !this.rowDraft || this.rowDraft.configKey !== configKey) return;
    const cpt = await this.api.getCpt(modelId, node);
    this.cptK = cpt.k;
    const validation = validateRowDraft(this.rowDraft.cells, cpt.k);
    if (!validation.ok) return; // button is disabled anyway; belt and braces
    const config = configKey === "" ? [] : configKey.split(",").map(Number);
    await this.api.setCptRow(modelId, node, config, this.rowDraft.cells as number[]);
    this.rowDraft = undefined;
    await this.loadPanelData();
  }

  private async submitManual(questionId: string, raw: string) {
    if (!this.capture?.page) return;
    const checked = validateManualAnswer(raw);
    if (!checked.ok) {
      this.capture.status = { questionId, kind: "rejected", message: checked.message };
      this.render();
      return;
    }
    const result = await this.api.submitAnswer(this.capture.token, {
      question_id: questionId,
      value: checked.value,
    });
    this.capture.status = {
      questionId,
      kind: "accepted",
      message: `recorded ${result.value} (answer #${result.n})`,
    };
    this.render();
  }

  private async submitQuickSet(questionId: string, label: string) {
    if (!this.capture?.page) return;
    const result = await this.api.submitAnswer(this.capture.token, {
      question_id: questionId,
      quick_set: label,
    });
    this.capture.status = {
      questionId,
      kind: "accepted",
      message: `recorded ${result.value} (${label})`,
    };
    this.render();
  }

  private async applyEvidence() {
    const modelId = this.view.modelId;
    if (!modelId) return;
    try {
      await this.api.setEvidence(modelId, this.view.pendingEvidence);
      this.causal.contradiction = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.causal.contradiction = String(err.detail);
      } else {
        throw err;
      }
    }
    await this.refreshModel();
    await this.refreshCausal();
    this.render();
  }

  private surfaceError(err: unknown) {
    if (err instanceof ApiError) {
      this.editorError = cycleErrorFrom(err.detail);
    } else {
      this.editorError = { message: String(err) };
    }
    this.render();
  }
}

declare const document: Document;
declare const location: Location;

if (typeof document !== "undefined" && document.getElementById("app")) {
  void new App(document.getElementById("app")!).start();
}

export { App };
