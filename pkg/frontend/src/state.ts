/** Session view state. Panels only render what the API returned; this record
 * tracks which slice of it the user is looking at and what they are about to
 * submit. */

export type Panel = "editor" | "cpt" | "capture" | "noise" | "causal";

export interface ViewState {
  modelId: string | null;
  selectedNode: string | null;
  panel: Panel;
  /** node id -> state label, staged before PUT /evidence */
  pendingEvidence: Record<string, string>;
  /** node id -> state label, staged do-interventions for the causal panel */
  pendingInterventions: Record<string, string>;
  causalTarget: { node: string; state: string } | null;
}

export const initialView: ViewState = {
  modelId: null,
  selectedNode: null,
  panel: "editor",
  pendingEvidence: {},
  pendingInterventions: {},
  causalTarget: null,
};

export type Action =
  | { kind: "open-model"; modelId: string }
  | { kind: "switch-panel"; panel: Panel }
  | { kind: "select-node"; node: string | null }
  | { kind: "stage-evidence"; node: string; state: string }
  | { kind: "unstage-evidence"; node: string }
  | { kind: "clear-evidence" }
  | { kind: "stage-intervention"; node: string; state: string }
  | { kind: "unstage-intervention"; node: string }
  | { kind: "set-causal-target"; node: string; state: string };

export function reduce(view: ViewState, action: Action): ViewState {
  switch (action.kind) {
    case "open-model":
      return { ...initialView, modelId: action.modelId };
    case "switch-panel":
      return { ...view, panel: action.panel };
    case "select-node":
      return { ...view, selectedNode: action.node };
    case "stage-evidence":
      return { ...view, pendingEvidence: { ...view.pendingEvidence, [action.node]: action.state } };
    case "unstage-evidence": {
      const { [action.node]: _, ...rest } = view.pendingEvidence;
      return { ...view, pendingEvidence: rest };
    }
    case "clear-evidence":
      return { ...view, pendingEvidence: {} };
    case "stage-intervention":
      return {
        ...view,
        pendingInterventions: { ...view.pendingInterventions, [action.node]: action.state },
      };
    case "unstage-intervention": {
      const { [action.node]: _, ...rest } = view.pendingInterventions;
      return { ...view, pendingInterventions: rest };
    }
    case "set-causal-target":
      return { ...view, causalTarget: { node: action.node, state: action.state } };
  }
}
