use crate::builtin::SpecialistSpec;
use crate::chess::Board;
use crate::engine::EngineRef;
use crate::team::MemberId;

/// Known-better member for a pair of specialists: the one playing its
/// strong engine where the other does not. `None` when either member is
/// not a specialist.
pub fn specialist_ground_truth(
    members: &[EngineRef; 2],
) -> Option<impl Fn(&Board) -> Option<MemberId> + Sync> {
    let spec = |e: &EngineRef| match e {
        EngineRef::Specialist(s) => Some(s.clone()),
        _ => None,
    };
    let pair: [SpecialistSpec; 2] = [spec(&members[0])?, spec(&members[1])?];
    Some(move |board: &Board| {
        match (pair[0].is_strong_at(board), pair[1].is_strong_at(board)) {
            (true, false) => Some(MemberId::ONE),
            (false, true) => Some(MemberId::TWO),
            _ => None,
        }
    })
}
