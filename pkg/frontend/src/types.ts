// Wire types for the chat service API. Field names match the JSON
// emitted by the backend, so no mapping layer is needed.

export interface SessionInfo {
  id: string;
  title: string;
  created_at: number;
  message_count: number;
}

export interface Citation {
  chunk_id: string;
  title: string;
  date: string;
  score: number;
  text: string;
}

export interface ChatMessage {
  id: string;
  role: "user" | "assistant";
  text: string;
  ts: number;
  error: boolean;
  citations: Citation[];
}

export interface SessionDetail {
  session: SessionInfo;
  messages: ChatMessage[];
}

export interface AskResponse {
  user_message: ChatMessage;
  assistant_message: ChatMessage;
}

export interface SearchResponse {
  results: Array<{
    chunk_id: string;
    title: string;
    date: string;
    score: number;
    text: string;
  }>;
}

// Error payload shared by every non-2xx response.
export interface ApiErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}
