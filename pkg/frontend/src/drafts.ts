/** Draft persistence: answers live in storage keyed by (rater, instance), so
 * a reload, crash, or offline spell never loses work in progress. */

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface Draft {
  /** `${questionId}:${slotIndex}` -> value 1..5 */
  answers: Record<string, number>;
  comment: string;
}

export class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.has(key) ? (this.data.get(key) as string) : null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export function answerKey(questionId: string, slotIndex: number): string {
  return `${questionId}:${slotIndex}`;
}

export class DraftStore {
  constructor(private readonly storage: StorageLike) {}

  private key(raterId: string, instanceId: string): string {
    return `rating-draft:${raterId}:${instanceId}`;
  }

  private submittedKey(raterId: string, instanceId: string): string {
    return `rating-submitted:${raterId}:${instanceId}`;
  }

  load(raterId: string, instanceId: string): Draft {
    const raw = this.storage.getItem(this.key(raterId, instanceId));
    if (!raw) return { answers: {}, comment: "" };
    try {
      const parsed = JSON.parse(raw) as Draft;
      return { answers: parsed.answers ?? {}, comment: parsed.comment ?? "" };
    } catch {
      return { answers: {}, comment: "" };
    }
  }

  save(raterId: string, instanceId: string, draft: Draft): void {
    this.storage.setItem(this.key(raterId, instanceId), JSON.stringify(draft));
  }

  clear(raterId: string, instanceId: string): void {
    this.storage.removeItem(this.key(raterId, instanceId));
  }

  markSubmitted(raterId: string, instanceId: string): void {
    this.storage.setItem(this.submittedKey(raterId, instanceId), "1");
  }

  wasSubmitted(raterId: string, instanceId: string): boolean {
    return this.storage.getItem(this.submittedKey(raterId, instanceId)) === "1";
  }
}
