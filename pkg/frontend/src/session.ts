/** Session state machine, free of DOM concerns so it is testable headless.
 *
 * Lifecycle: loadNext() fetches the blinded instance and restores any saved
 * draft; answer() records values (persisting the draft on every change);
 * submit() posts the complete answer set once — an in-flight or already
 * submitted instance never posts twice — then advances. Network failures
 * flip the state to "offline" and keep the draft untouched.
 */

import { ApiClient, ApiError } from "./api.js";
import { answerKey, Draft, DraftStore } from "./drafts.js";
import {
  BlindedInstance,
  Progress,
  RatingSubmission,
  SCALE_MAX,
  SCALE_MIN,
  SOURCE_SLOT,
  isCompletion,
} from "./types.js";

export type SessionState = "idle" | "loading" | "rating" | "offline" | "done";

export interface RequiredAnswer {
  questionId: string;
  slotIndex: number;
}

export class SessionController {
  state: SessionState = "idle";
  instance: BlindedInstance | null = null;
  draft: Draft = { answers: {}, comment: "" };
  progress: Progress | null = null;
  lastError: string | null = null;
  private submitting = false;

  constructor(
    private readonly api: ApiClient,
    private readonly drafts: DraftStore,
    readonly raterId: string,
    readonly country?: string,
  ) {}

  /** Every (question, slot) pair the rater must answer, including the
   * source-image culture question. */
  requiredAnswers(): RequiredAnswer[] {
    if (!this.instance) return [];
    const required: RequiredAnswer[] = [];
    for (const question of this.instance.questions) {
      for (const slot of this.instance.slots) {
        required.push({ questionId: question.id, slotIndex: slot.slot_index });
      }
    }
    required.push({ questionId: this.instance.source_question, slotIndex: SOURCE_SLOT });
    return required;
  }

  isComplete(): boolean {
    return this.requiredAnswers().every(
      ({ questionId, slotIndex }) =>
        this.draft.answers[answerKey(questionId, slotIndex)] !== undefined,
    );
  }

  async loadNext(): Promise<void> {
    this.state = "loading";
    this.lastError = null;
    let payload;
    try {
      payload = await this.api.nextInstance(this.raterId, this.country);
    } catch (err) {
      this.state = "offline";
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return; // the current draft stays intact for retry
    }
    if (isCompletion(payload)) {
      this.instance = null;
      this.progress = payload.progress;
      this.state = "done";
      return;
    }
    this.instance = payload;
    this.draft = this.drafts.load(this.raterId, payload.instance_id);
    this.state = "rating";
  }

  answer(questionId: string, slotIndex: number, value: number): void {
    if (!this.instance) throw new Error("no instance loaded");
    if (!Number.isInteger(value) || value < SCALE_MIN || value > SCALE_MAX) {
      throw new RangeError(`rating must be an integer in ${SCALE_MIN}..${SCALE_MAX}`);
    }
    this.draft.answers[answerKey(questionId, slotIndex)] = value;
    this.drafts.save(this.raterId, this.instance.instance_id, this.draft);
  }

  setComment(text: string): void {
    if (!this.instance) throw new Error("no instance loaded");
    this.draft.comment = text;
    this.drafts.save(this.raterId, this.instance.instance_id, this.draft);
  }

  buildSubmission(): RatingSubmission[] {
    if (!this.instance) throw new Error("no instance loaded");
    const instanceId = this.instance.instance_id;
    const comment = this.draft.comment.trim();
    return this.requiredAnswers().map(({ questionId, slotIndex }, i) => ({
      instance_id: instanceId,
      rater_id: this.raterId,
      question_id: questionId,
      slot_index: slotIndex,
      value: this.draft.answers[answerKey(questionId, slotIndex)] as number,
      // the optional observation rides along once, on the first record
      ...(i === 0 && comment ? { free_comment: comment } : {}),
    }));
  }

  /** Submit the complete draft exactly once, then advance to the next
   * instance. Returns false when nothing was submitted (incomplete draft,
   * submit already in flight, or instance already submitted). */
  async submit(): Promise<boolean> {
    if (!this.instance || this.submitting || !this.isComplete()) return false;
    const instanceId = this.instance.instance_id;
    if (this.drafts.wasSubmitted(this.raterId, instanceId)) return false;
    this.submitting = true;
    try {
      await this.api.submitRatings(this.buildSubmission());
    } catch (err) {
      this.state = "offline";
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return false; // draft preserved; user can retry
    } finally {
      this.submitting = false;
    }
    this.drafts.markSubmitted(this.raterId, instanceId);
    this.drafts.clear(this.raterId, instanceId);
    this.draft = { answers: {}, comment: "" };
    await this.loadNext();
    return true;
  }

  async skip(reason: string): Promise<boolean> {
    if (!this.instance) return false;
    const instanceId = this.instance.instance_id;
    try {
      await this.api.submitRatings([
        { instance_id: instanceId, rater_id: this.raterId, skip: true, reason },
      ]);
    } catch (err) {
      this.state = "offline";
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return false;
    }
    this.drafts.clear(this.raterId, instanceId);
    this.draft = { answers: {}, comment: "" };
    await this.loadNext();
    return true;
  }

  async refreshProgress(): Promise<void> {
    try {
      this.progress = await this.api.progress(this.raterId, this.country);
    } catch {
      // progress is cosmetic; never disturb the rating flow over it
    }
  }
}
