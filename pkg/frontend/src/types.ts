/** Payload shapes of the rating service API. The instance payload is blinded:
 * it names slots, never the systems that produced them. */

export interface QuestionSpec {
  id: string;
  text: string;
  scale_min: number;
  scale_max: number;
}

export interface SlotSpec {
  slot_index: number;
  label: string; // "Image-2" .. "Image-N"
  image_url: string;
}

export interface BlindedInstance {
  instance_id: string;
  country: string;
  dataset_kind: string;
  context_label: string | null;
  source: { label: string; image_url: string };
  slots: SlotSpec[];
  questions: QuestionSpec[];
  source_question: string;
}

export interface CompletionPayload {
  done: true;
  progress: Progress;
}

export type NextPayload = BlindedInstance | CompletionPayload;

export interface Progress {
  rater_id: string;
  total: number;
  completed: number;
  skipped: number;
  remaining: number;
}

export interface RatingSubmission {
  instance_id: string;
  rater_id: string;
  question_id: string;
  slot_index: number;
  value: number;
  free_comment?: string | null;
}

export interface SkipSubmission {
  instance_id: string;
  rater_id: string;
  skip: true;
  reason: string;
}

export interface Ack {
  ok: boolean;
  recorded: number;
}

export function isCompletion(payload: NextPayload): payload is CompletionPayload {
  return (payload as CompletionPayload).done === true;
}

export const SOURCE_SLOT = 0;
export const SCALE_MIN = 1;
export const SCALE_MAX = 5;
export const SCALE_LOW_LABEL = "strongly disagree";
export const SCALE_HIGH_LABEL = "strongly agree";
