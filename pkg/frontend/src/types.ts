// Wire types mirroring the service JSON. All offsets are Unicode code point
// offsets into the document text.

export type Outcome = "eligible" | "ineligible" | "review";

export type AnnotationSource = "human" | "model" | "baseline";

export const TARGET_TYPES = [
  "coupon_fixed",
  "coupon_variable_index",
  "coupon_variable_margin",
  "coupon_variable_operator",
  "coupon_variable_tenor",
  "currency",
  "early_redemption_amount",
  "early_redemption",
  "isin",
  "principal_amount",
  "redemption_at_maturity_amount",
  "redemption_at_maturity",
  "special_termination",
  "special_termination_amount",
  "status_non_preferred",
  "status_senior_non_preferred",
  "type_of_instrument",
] as const;

export type TargetType = (typeof TARGET_TYPES)[number];

export type Fragment = [number, number];

export type AnnotationRecord = {
  type: string;
  fragments: Fragment[];
  source: AnnotationSource;
  confidence: number;
  annotator_id?: string | null;
};

export type DocumentMetadata = {
  isin?: string | null;
  issue_date?: string | null;
  issuer_group?: string | null;
  asset_type?: string | null;
  extra?: Record<string, string>;
};

export type DocumentRecord = {
  id: string;
  text: string;
  tokens?: { start: number; end: number }[];
  metadata?: DocumentMetadata;
  annotations: AnnotationRecord[];
};

export type Alternative = {
  value: string;
  confidence: number;
  fragments: Fragment[];
};

export type Decision = {
  criterion: string;
  outcome: Outcome;
  chosen_value: string | null;
  confidence: number;
  alternatives: Alternative[];
  explanation: string;
  supporting_fragments: Fragment[];
};

export type Verdict = {
  overall: Outcome;
  decisions: Decision[];
};

export type PredictResponse = {
  document_id: string;
  verdict: Verdict;
  annotations: AnnotationRecord[];
  model_version: string;
  config_version: string;
  warnings: string[];
  timings: Record<string, number>;
};

export type FeedbackAction = {
  action: "confirmed" | "edited" | "added" | "deleted";
  annotation: AnnotationRecord;
};

export type FeedbackPayload = {
  reviewer_id: string;
  actions: FeedbackAction[];
  annotations: AnnotationRecord[];
};
